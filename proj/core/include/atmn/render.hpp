#pragma once

#include <string>
#include <vector>

#include "atmn/explain.hpp"

namespace atmn {

enum class RenderFormat { Ansi, Html, Json };

struct RenderedMap {
    RenderFormat format = RenderFormat::Ansi;
    std::string payload;
};

// Static visualizations of a RelevanceMap. Scores are max-normalized to
// [0,1] with negatives clamped; the JSON format is the explainer
// serialization unchanged. token_texts, when given, supplies the text shown
// per token position; otherwise positions are rendered as #index.
RenderedMap render(const RelevanceMap& map, RenderFormat format,
                   const std::vector<std::string>* token_texts = nullptr);

RenderFormat parse_render_format(const std::string& name);

}  // namespace atmn
