#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tapfw/errors.hpp"
#include "tapfw/network.hpp"

namespace tapfw {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// Strips `\r` and everything from the first `~` on (TNTP comment).
inline std::string_view strip_comment(std::string_view line) {
    if (auto pos = line.find('~'); pos != std::string_view::npos) line = line.substr(0, pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
}

inline double parse_double(std::string_view tok, int line_no, const char* what) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(line_no, std::string("expected a number for ") + what + ", got '" +
                                      std::string(tok) + "'");
    return v;
}

inline long parse_int(std::string_view tok, int line_no, const char* what) {
    long v = 0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(line_no, std::string("expected an integer for ") + what + ", got '" +
                                      std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

// Iterates lines over both `\n` and `\r\n` input.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::optional<std::string_view> next() {
        if (pos_ >= text_.size()) return std::nullopt;
        std::size_t nl = text_.find('\n', pos_);
        std::string_view line;
        if (nl == std::string_view::npos) {
            line = text_.substr(pos_);
            pos_ = text_.size();
        } else {
            line = text_.substr(pos_, nl - pos_);
            pos_ = nl + 1;
        }
        ++line_no_;
        return line;
    }

    int line_no() const noexcept { return line_no_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_no_ = 0;
};

// `<TAG> value`; returns tag (uppercased, single-spaced) and value text.
inline bool parse_metadata_line(std::string_view line, std::string& tag, std::string_view& value) {
    line = trim(line);
    if (line.empty() || line.front() != '<') return false;
    auto close = line.find('>');
    if (close == std::string_view::npos) return false;
    std::string_view raw = line.substr(1, close - 1);
    tag.clear();
    bool pending_space = false;
    for (char c : raw) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !tag.empty();
        } else {
            if (pending_space) tag.push_back(' ');
            pending_space = false;
            tag.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        }
    }
    value = trim(line.substr(close + 1));
    return true;
}

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// Parses the TNTP link ("_net.tntp") format. Edge order is file order.
// The `b` column becomes Edge::bpr_coeff and `power` becomes
// Edge::bpr_power; length/speed/toll/link_type are retained untouched.
inline Network parse_net(std::string_view text) {
    detail::LineReader reader(text);
    std::optional<long> n_nodes, n_zones, n_links, first_thru;
    bool metadata_done = false;

    Network net;
    std::string tag;
    std::string_view value;

    while (auto raw = reader.next()) {
        std::string_view line = detail::trim(detail::strip_comment(*raw));
        if (line.empty()) continue;
        const int ln = reader.line_no();

        if (!metadata_done) {
            if (!detail::parse_metadata_line(line, tag, value))
                throw ParseError(ln, "expected metadata line, got '" + std::string(line) + "'");
            if (tag == "END OF METADATA") {
                if (!n_nodes) throw ParseError(ln, "missing <NUMBER OF NODES>");
                if (!n_zones) throw ParseError(ln, "missing <NUMBER OF ZONES>");
                if (!n_links) throw ParseError(ln, "missing <NUMBER OF LINKS>");
                if (*n_nodes <= 0) throw ParseError(ln, "<NUMBER OF NODES> must be positive");
                if (*n_zones <= 0 || *n_zones > *n_nodes)
                    throw ParseError(ln, "<NUMBER OF ZONES> must be in [1, node count]");
                net.node_count = static_cast<int>(*n_nodes);
                net.zone_count = static_cast<int>(*n_zones);
                net.first_thru_node = static_cast<int>(first_thru.value_or(1));
                if (net.first_thru_node < 1)
                    throw ParseError(ln, "<FIRST THRU NODE> must be positive");
                net.edges.reserve(static_cast<std::size_t>(*n_links));
                metadata_done = true;
            } else if (tag == "NUMBER OF NODES") {
                n_nodes = detail::parse_int(value, ln, "<NUMBER OF NODES>");
            } else if (tag == "NUMBER OF ZONES") {
                n_zones = detail::parse_int(value, ln, "<NUMBER OF ZONES>");
            } else if (tag == "NUMBER OF LINKS") {
                n_links = detail::parse_int(value, ln, "<NUMBER OF LINKS>");
            } else if (tag == "FIRST THRU NODE") {
                first_thru = detail::parse_int(value, ln, "<FIRST THRU NODE>");
            }
            // unknown tags are ignored
            continue;
        }

        auto tokens = detail::split_ws(line);
        if (!tokens.empty() && tokens.back() == ";") tokens.pop_back();
        if (!tokens.empty() && tokens.back().size() > 1 && tokens.back().back() == ';')
            tokens.back().remove_suffix(1);
        if (tokens.empty()) continue;
        if (tokens.size() < 10)
            throw ParseError(ln, "link row has " + std::to_string(tokens.size()) +
                                     " columns, expected 10");
        if (tokens.size() > 10)
            throw ParseError(ln, "unexpected trailing fields in link row");
        if (static_cast<long>(net.edges.size()) >= *n_links)
            throw ParseError(ln, "more link rows than declared <NUMBER OF LINKS> " +
                                     std::to_string(*n_links));

        Edge e;
        e.tail = static_cast<NodeId>(detail::parse_int(tokens[0], ln, "init node"));
        e.head = static_cast<NodeId>(detail::parse_int(tokens[1], ln, "term node"));
        e.capacity = detail::parse_double(tokens[2], ln, "capacity");
        e.length = detail::parse_double(tokens[3], ln, "length");
        e.free_flow_time = detail::parse_double(tokens[4], ln, "free flow time");
        e.bpr_coeff = detail::parse_double(tokens[5], ln, "b");
        e.bpr_power = detail::parse_double(tokens[6], ln, "power");
        e.speed = detail::parse_double(tokens[7], ln, "speed");
        e.toll = detail::parse_double(tokens[8], ln, "toll");
        e.link_type = detail::parse_double(tokens[9], ln, "link type");

        if (e.tail < 1 || e.tail > net.node_count)
            throw ParseError(ln, "init node " + std::to_string(e.tail) + " out of range [1, " +
                                     std::to_string(net.node_count) + "]");
        if (e.head < 1 || e.head > net.node_count)
            throw ParseError(ln, "term node " + std::to_string(e.head) + " out of range [1, " +
                                     std::to_string(net.node_count) + "]");
        if (!(e.capacity > 0.0)) throw ParseError(ln, "capacity must be > 0");
        if (e.free_flow_time < 0.0) throw ParseError(ln, "free flow time must be >= 0");
        if (e.bpr_coeff < 0.0) throw ParseError(ln, "b must be >= 0");
        if (e.bpr_power < 0.0) throw ParseError(ln, "power must be >= 0");
        net.edges.push_back(e);
    }

    if (!metadata_done) throw ParseError(reader.line_no(), "missing <END OF METADATA>");
    if (static_cast<long>(net.edges.size()) != *n_links)
        throw ParseError(reader.line_no(),
                         "declared <NUMBER OF LINKS> " + std::to_string(*n_links) +
                             " but parsed " + std::to_string(net.edges.size()) + " rows");
    return net;
}

// Parses the TNTP trips format. Only entries with demand > 0 are kept;
// total_demand is the arithmetic sum of kept entries in file order. A
// declared <TOTAL OD FLOW> differing by more than 0.5% from the parsed sum
// appends a warning (several public files are inconsistent) but the parse
// still succeeds.
inline DemandMatrix parse_trips(std::string_view text,
                                std::vector<std::string>* warnings = nullptr) {
    detail::LineReader reader(text);
    std::optional<long> n_zones;
    std::optional<double> declared_total;
    bool metadata_done = false;

    DemandMatrix dm;
    NodeId current_origin = 0;
    bool have_origin = false;
    double total = 0.0;

    std::string tag;
    std::string_view value;

    while (auto raw = reader.next()) {
        std::string_view line = detail::trim(detail::strip_comment(*raw));
        if (line.empty()) continue;
        const int ln = reader.line_no();

        if (!metadata_done) {
            if (!detail::parse_metadata_line(line, tag, value))
                throw ParseError(ln, "expected metadata line, got '" + std::string(line) + "'");
            if (tag == "END OF METADATA") {
                if (!n_zones) throw ParseError(ln, "missing <NUMBER OF ZONES>");
                if (*n_zones <= 0) throw ParseError(ln, "<NUMBER OF ZONES> must be positive");
                dm.zone_count = static_cast<int>(*n_zones);
                metadata_done = true;
            } else if (tag == "NUMBER OF ZONES") {
                n_zones = detail::parse_int(value, ln, "<NUMBER OF ZONES>");
            } else if (tag == "TOTAL OD FLOW") {
                declared_total = detail::parse_double(value, ln, "<TOTAL OD FLOW>");
            }
            continue;
        }

        // `Origin <id>` starts a block; anything else is `dest : demand ;` pairs.
        {
            auto tokens = detail::split_ws(line);
            if (!tokens.empty()) {
                std::string head(tokens[0]);
                for (char& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
                if (head == "origin") {
                    if (tokens.size() != 2)
                        throw ParseError(ln, "expected 'Origin <zone>'");
                    long o = detail::parse_int(tokens[1], ln, "origin zone");
                    if (o < 1 || o > *n_zones)
                        throw ParseError(ln, "origin zone " + std::to_string(o) +
                                                 " out of range [1, " + std::to_string(*n_zones) + "]");
                    current_origin = static_cast<NodeId>(o);
                    have_origin = true;
                    continue;
                }
            }
        }

        if (!have_origin)
            throw ParseError(ln, "demand data before the first 'Origin' header");

        // Split on ';' -- several pairs per line.
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t semi = line.find(';', start);
            std::string_view seg = (semi == std::string_view::npos)
                                       ? line.substr(start)
                                       : line.substr(start, semi - start);
            start = (semi == std::string_view::npos) ? line.size() + 1 : semi + 1;
            seg = detail::trim(seg);
            if (seg.empty()) continue;

            auto colon = seg.find(':');
            if (colon == std::string_view::npos)
                throw ParseError(ln, "expected 'destination : demand', got '" + std::string(seg) + "'");
            std::string_view dest_tok = detail::trim(seg.substr(0, colon));
            std::string_view dem_tok = detail::trim(seg.substr(colon + 1));
            long dest = detail::parse_int(dest_tok, ln, "destination zone");
            double d = detail::parse_double(dem_tok, ln, "demand");
            if (dest < 1 || dest > *n_zones)
                throw ParseError(ln, "destination zone " + std::to_string(dest) +
                                         " out of range [1, " + std::to_string(*n_zones) + "]");
            if (d < 0.0) throw ParseError(ln, "negative demand " + detail::format_g17(d));
            if (d > 0.0) {
                dm.entries.push_back({current_origin, static_cast<NodeId>(dest), d});
                total += d;
            }
        }
    }

    if (!metadata_done) throw ParseError(reader.line_no(), "missing <END OF METADATA>");
    dm.total_demand = total;

    if (warnings && declared_total) {
        double ref = std::abs(*declared_total);
        double diff = std::abs(total - *declared_total);
        if (diff > 0.005 * ref || (ref == 0.0 && total > 0.0))
            warnings->push_back("declared <TOTAL OD FLOW> " + detail::format_g17(*declared_total) +
                                " differs from parsed sum " + detail::format_g17(total) +
                                " by more than 0.5%");
    }
    return dm;
}

// Serializes a Network back to TNTP text. Numbers carry 17 significant
// digits, so parse(serialize(net)) == net field-wise.
inline std::string serialize_network(const Network& net) {
    std::string out;
    out += "<NUMBER OF ZONES> " + std::to_string(net.zone_count) + "\n";
    out += "<NUMBER OF NODES> " + std::to_string(net.node_count) + "\n";
    out += "<FIRST THRU NODE> " + std::to_string(net.first_thru_node) + "\n";
    out += "<NUMBER OF LINKS> " + std::to_string(net.edges.size()) + "\n";
    out += "<END OF METADATA>\n";
    out += "~ init term capacity length fftime b power speed toll type ;\n";
    for (const Edge& e : net.edges) {
        out += std::to_string(e.tail) + "\t" + std::to_string(e.head) + "\t" +
               detail::format_g17(e.capacity) + "\t" + detail::format_g17(e.length) + "\t" +
               detail::format_g17(e.free_flow_time) + "\t" + detail::format_g17(e.bpr_coeff) +
               "\t" + detail::format_g17(e.bpr_power) + "\t" + detail::format_g17(e.speed) + "\t" +
               detail::format_g17(e.toll) + "\t" + detail::format_g17(e.link_type) + "\t;\n";
    }
    return out;
}

}  // namespace tapfw
