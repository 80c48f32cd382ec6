#include "atmn/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace atmn {

namespace {

std::vector<double> normalized_intensities(const RelevanceMap& map) {
    std::vector<double> clamped(map.scores.size());
    double max = 0.0;
    for (std::size_t i = 0; i < map.scores.size(); ++i) {
        clamped[i] = std::max(0.0, map.scores[i]);
        max = std::max(max, clamped[i]);
    }
    if (max > 0.0) {
        for (double& v : clamped) v /= max;
    }
    return clamped;
}

std::string span_text(const Span& span, const std::vector<std::string>* texts) {
    std::string out;
    for (std::uint32_t t = span.begin; t < span.end; ++t) {
        if (!out.empty()) out += ' ';
        if (texts && t < texts->size()) {
            out += (*texts)[t];
        } else {
            out += '#' + std::to_string(t);
        }
    }
    return out;
}

std::string escape_html(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string render_ansi(const RelevanceMap& map, const std::vector<std::string>* texts) {
    const std::vector<double> intensity = normalized_intensities(map);
    std::ostringstream out;
    for (std::size_t i = 0; i < map.spans.size(); ++i) {
        if (i > 0) out << ' ';
        const int level = static_cast<int>(std::lround(intensity[i] * 255.0));
        if (level > 0) {
            out << "\x1b[48;2;" << level << ";0;0m" << span_text(map.spans[i], texts)
                << "\x1b[0m";
        } else {
            out << span_text(map.spans[i], texts);
        }
    }
    out << '\n';
    return out.str();
}

std::string render_html(const RelevanceMap& map, const std::vector<std::string>* texts) {
    const std::vector<double> intensity = normalized_intensities(map);
    std::ostringstream out;
    out << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
        << "<title>relevance map</title>\n</head>\n<body>\n"
        << "<p style=\"font-family: monospace; line-height: 1.8;\">\n";
    for (std::size_t i = 0; i < map.spans.size(); ++i) {
        if (i > 0) out << ' ';
        std::ostringstream alpha;
        alpha.precision(3);
        alpha << std::fixed << intensity[i];
        out << "<span style=\"background-color: rgba(255,64,0," << alpha.str()
            << "); padding: 1px 2px;\" title=\"" << map.scores[i] << "\">"
            << escape_html(span_text(map.spans[i], texts)) << "</span>";
    }
    out << "\n</p>\n</body>\n</html>\n";
    return out.str();
}

}  // namespace

RenderedMap render(const RelevanceMap& map, RenderFormat format,
                   const std::vector<std::string>* token_texts) {
    RenderedMap out;
    out.format = format;
    switch (format) {
        case RenderFormat::Ansi:
            out.payload = render_ansi(map, token_texts);
            break;
        case RenderFormat::Html:
            out.payload = render_html(map, token_texts);
            break;
        case RenderFormat::Json:
            out.payload = relevance_to_json(map) + "\n";
            break;
    }
    return out;
}

RenderFormat parse_render_format(const std::string& name) {
    if (name == "ansi") return RenderFormat::Ansi;
    if (name == "html") return RenderFormat::Html;
    if (name == "json") return RenderFormat::Json;
    throw std::invalid_argument("unknown output format '" + name + "'");
}

}  // namespace atmn
