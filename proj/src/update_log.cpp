#include "kws/update_log.hpp"

#include <fstream>
#include <map>

namespace kws {

namespace {

std::vector<std::string_view> fields(std::string_view text)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto tab = text.find('\t', start);
        out.push_back(text.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) {
            return out;
        }
        start = tab + 1;
    }
}

int hex_digit(char c)
{
    if (c >= '0' && c <= '9') {
        return c - '0';
    }
    if (c >= 'a' && c <= 'f') {
        return c - 'a' + 10;
    }
    if (c >= 'A' && c <= 'F') {
        return c - 'A' + 10;
    }
    return -1;
}

}  // namespace

std::string percent_encode(std::string_view text)
{
    static char const digits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (char c: text) {
        if (c == '%' || c == '\t' || c == '\n' || c == '\r') {
            auto byte = static_cast<unsigned char>(c);
            out += '%';
            out += digits[byte >> 4U];
            out += digits[byte & 15U];
        } else {
            out += c;
        }
    }
    return out;
}

std::string percent_decode(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '%') {
            out += text[i];
            continue;
        }
        if (i + 2 >= text.size()) {
            throw std::invalid_argument("truncated escape");
        }
        auto hi = hex_digit(text[i + 1]);
        auto lo = hex_digit(text[i + 2]);
        if (hi < 0 || lo < 0) {
            throw std::invalid_argument("bad escape '" + std::string(text.substr(i, 3)) + "'");
        }
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
    }
    return out;
}

std::string format_op(SchemaGraph const& schema, UpdateOp const& op)
{
    auto rel = schema.find(op.relation);
    if (!rel) {
        throw StoreError("unknown relation '" + op.relation + "'");
    }
    if (op.kind == UpdateOp::Kind::deletion) {
        return "D\t" + op.relation + "\t" + percent_encode(op.key);
    }
    auto attrs = schema.relation(*rel).attributes();
    std::string out = "I\t" + op.relation + "\t" + percent_encode(op.key);
    for (std::size_t i = 1; i < attrs.size() && i < op.tuple.values.size(); ++i) {
        out += "\t" + attrs[i] + "=" + percent_encode(op.tuple.values[i]);
    }
    return out;
}

UpdateOp parse_op(SchemaGraph const& schema, std::string_view text, std::size_t line)
{
    if (!text.empty() && text.back() == '\r') {
        text.remove_suffix(1);
    }
    auto parts = fields(text);
    if (parts.size() < 3) {
        throw LogError(line, "expected '<I|D> <relation> <key> ...'");
    }
    auto rel = schema.find(parts[1]);
    if (!rel) {
        throw LogError(line, "unknown relation '" + std::string(parts[1]) + "'");
    }
    std::string key;
    try {
        key = percent_decode(parts[2]);
    } catch (std::invalid_argument const& e) {
        throw LogError(line, e.what());
    }
    if (key.empty()) {
        throw LogError(line, "empty key");
    }
    if (parts[0] == "D") {
        if (parts.size() != 3) {
            throw LogError(line, "deletion takes no attributes");
        }
        return UpdateOp::erase(std::string(parts[1]), key);
    }
    if (parts[0] != "I") {
        throw LogError(line, "unknown operation '" + std::string(parts[0]) + "'");
    }
    auto const& rs = schema.relation(*rel);
    std::map<std::string, std::string> attrs;
    attrs[rs.key] = key;
    for (std::size_t i = 3; i < parts.size(); ++i) {
        auto eq = parts[i].find('=');
        if (eq == std::string_view::npos) {
            throw LogError(line, "expected attr=value, got '" + std::string(parts[i]) + "'");
        }
        std::string name(parts[i].substr(0, eq));
        if (name == rs.key) {
            throw LogError(line, "key attribute given twice");
        }
        if (!rs.attribute_index(name)) {
            throw LogError(line, "relation '" + rs.name + "' has no attribute '" + name + "'");
        }
        try {
            if (!attrs.emplace(name, percent_decode(parts[i].substr(eq + 1))).second) {
                throw LogError(line, "attribute '" + name + "' given twice");
            }
        } catch (std::invalid_argument const& e) {
            throw LogError(line, e.what());
        }
    }
    return UpdateOp::insert(std::string(parts[1]), build_tuple(rs, attrs));
}

std::vector<UpdateOp> read_update_log(SchemaGraph const& schema, std::istream& in)
{
    std::vector<UpdateOp> ops;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty() || text == "\r" || text.front() == '#') {
            continue;
        }
        ops.push_back(parse_op(schema, text, line));
    }
    return ops;
}

std::vector<UpdateOp> read_update_log_file(SchemaGraph const& schema, std::filesystem::path const& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read update log " + path.string());
    }
    return read_update_log(schema, in);
}

}  // namespace kws
