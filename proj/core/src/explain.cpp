#include "atmn/explain.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <utility>

#include "atmn/scheduler.hpp"

namespace atmn {

namespace {

using nlohmann::json;

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool is_delimiter(const std::string& token, const ChunkingRule& rule) {
    for (const std::string& d : rule.delimiters) {
        if (token == d || token == trimmed(d)) return true;
    }
    return false;
}

struct PlannedJobs {
    RelevanceMap::Unit unit;
    std::vector<Span> spans;
};

// Shared core of the explain entry points: one baseline pass, then one
// scheduled perturbed pass per span.
RelevanceMap run_explanation(const PromptInput& prompt, ExplanationTarget target,
                             const WeightSet& weights, const ExplainOptions& options,
                             const ExecutionPolicy& policy, PlannedJobs jobs,
                             bool reset_budget) {
    const std::size_t n_prompt = prompt_length(prompt);
    if (n_prompt == 0) {
        throw std::invalid_argument("explain: empty prompt");
    }
    if (target.tokens.empty()) {
        throw std::invalid_argument("explain: empty target");
    }
    const std::size_t total = n_prompt + target.tokens.size();
    if (total > weights.config.max_seq) {
        throw std::invalid_argument("explain: prompt plus target exceeds max_seq");
    }
    if (options.mode == ModifierMode::Additive && options.correlated) {
        throw std::invalid_argument(
            "explain: correlated suppression is undefined in additive mode");
    }
    if (options.mode == ModifierMode::Additive && jobs.unit == RelevanceMap::Unit::Chunk) {
        throw std::invalid_argument("explain: chunk plans are multiplicative only");
    }
    for (std::uint32_t layer : options.layers) {
        if (layer >= weights.config.n_layers) {
            throw std::invalid_argument("explain: layer index out of range");
        }
    }

    PassBudget* budget = policy.budget;
    if (budget && reset_budget) budget->reset();

    const double baseline =
        target_loss(prompt, target.tokens, weights, nullptr, options.reduction, budget);

    // The cosine neighborhood is computed once, on the initial embeddings
    // of the prompt only.
    SimilarityMatrix sim;
    const bool correlated =
        options.correlated && options.mode == ModifierMode::Multiplicative &&
        jobs.unit == RelevanceMap::Unit::Token;
    if (correlated) {
        sim = cosine_similarity_matrix(embed(prompt, weights));
    }

    const std::size_t m = jobs.spans.size();
    const std::uint32_t workers =
        policy.workers > 0 ? policy.workers : default_workers(m);
    const WorkPlan plan = plan_batches(m, policy.batch_size, workers);

    // Plans are built inside the evaluator so that at most workers x 1 of
    // them are live at a time.
    auto evaluator = [&](std::size_t job) -> double {
        const Span span = jobs.spans[job];
        ModifierPlan modifier;
        if (jobs.unit == RelevanceMap::Unit::Token) {
            const std::size_t i = span.begin;
            if (options.mode == ModifierMode::Additive) {
                modifier = build_log_additive(i, options.factor, total);
            } else if (correlated) {
                modifier = build_correlated(i, options.factor, options.kappa, sim)
                               .extended(total);
            } else {
                modifier = build_single_token(i, options.factor, total);
            }
        } else {
            std::vector<std::size_t> indices;
            indices.reserve(span.end - span.begin);
            for (std::uint32_t i = span.begin; i < span.end; ++i) indices.push_back(i);
            modifier = build_chunk(indices, options.factor, total);
        }
        modifier.layers = options.layers;
        const double perturbed =
            target_loss(prompt, target.tokens, weights, &modifier, options.reduction,
                        budget);
        return perturbed - baseline;
    };

    RelevanceMap map;
    map.unit = jobs.unit;
    map.spans = std::move(jobs.spans);
    map.scores = execute_plan(plan, evaluator);
    map.baseline_loss = baseline;
    map.target = std::move(target);
    map.options = options;
    return map;
}

}  // namespace

std::vector<Span> chunk_spans(const std::vector<std::string>& token_texts,
                              const ChunkingRule& rule) {
    if (rule.delimiters.empty()) {
        throw std::invalid_argument("chunk_spans: empty delimiter list");
    }
    std::vector<Span> spans;
    std::uint32_t start = 0;
    for (std::uint32_t t = 0; t < token_texts.size(); ++t) {
        if (is_delimiter(token_texts[t], rule)) {
            spans.push_back({start, t + 1});  // delimiter closes its own chunk
            start = t + 1;
        }
    }
    if (start < token_texts.size()) {
        spans.push_back({start, static_cast<std::uint32_t>(token_texts.size())});
    }
    return spans;
}

double influence_of(const PromptInput& prompt, const ExplanationTarget& target,
                    const ModifierPlan& plan, const WeightSet& weights,
                    Reduction reduction, PassBudget* budget) {
    const double perturbed =
        target_loss(prompt, target.tokens, weights, &plan, reduction, budget);
    const double baseline =
        target_loss(prompt, target.tokens, weights, nullptr, reduction, budget);
    return perturbed - baseline;
}

RelevanceMap explain(const PromptInput& prompt, const ExplanationTarget& target,
                     const WeightSet& weights, const ExplainOptions& options,
                     const ExecutionPolicy& policy) {
    const std::size_t n = prompt_length(prompt);
    PlannedJobs jobs;
    jobs.unit = RelevanceMap::Unit::Token;
    jobs.spans.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        jobs.spans.push_back({i, i + 1});
    }
    return run_explanation(prompt, target, weights, options, policy, std::move(jobs),
                           /*reset_budget=*/true);
}

RelevanceMap explain_chunks(const TokenSequence& prompt,
                            const std::vector<std::string>& token_texts,
                            const ExplanationTarget& target, const WeightSet& weights,
                            const ChunkingRule& rule, const ExplainOptions& options,
                            const ExecutionPolicy& policy) {
    if (token_texts.size() != prompt.size()) {
        throw std::invalid_argument("explain_chunks: one text per prompt token required");
    }
    PlannedJobs jobs;
    jobs.unit = RelevanceMap::Unit::Chunk;
    jobs.spans = chunk_spans(token_texts, rule);
    if (jobs.spans.empty()) {
        throw std::invalid_argument("explain_chunks: chunking produced no chunks");
    }
    return run_explanation(prompt, target, weights, options, policy, std::move(jobs),
                           /*reset_budget=*/true);
}

RelevanceMap explain_global(const PromptInput& prompt, std::uint32_t steps,
                            const WeightSet& weights, const ExplainOptions& options,
                            const ExecutionPolicy& policy) {
    if (steps < 1) {
        throw std::invalid_argument("explain_global: steps must be >= 1");
    }
    if (policy.budget) policy.budget->reset();
    ExplanationTarget target;
    target.origin = ExplanationTarget::Origin::Generated;
    target.steps = steps;
    target.tokens = greedy_generate(prompt, weights, nullptr, steps, policy.budget);

    const std::size_t n = prompt_length(prompt);
    PlannedJobs jobs;
    jobs.unit = RelevanceMap::Unit::Token;
    for (std::uint32_t i = 0; i < n; ++i) {
        jobs.spans.push_back({i, i + 1});
    }
    // Budget keeps the generation passes; the explanation adds n+1 more.
    return run_explanation(prompt, std::move(target), weights, options, policy,
                           std::move(jobs), /*reset_budget=*/false);
}

namespace {

json options_to_json(const ExplainOptions& o) {
    return json{{"factor", o.factor},
                {"kappa", o.kappa},
                {"correlated", o.correlated},
                {"mode", o.mode == ModifierMode::Multiplicative ? "multiplicative"
                                                                : "additive"},
                {"layers", o.layers},
                {"reduction", o.reduction == Reduction::Mean ? "mean" : "sum"}};
}

ExplainOptions options_from_json(const json& j) {
    ExplainOptions o;
    o.factor = j.at("factor").get<float>();
    o.kappa = j.at("kappa").get<float>();
    o.correlated = j.at("correlated").get<bool>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "multiplicative") {
        o.mode = ModifierMode::Multiplicative;
    } else if (mode == "additive") {
        o.mode = ModifierMode::Additive;
    } else {
        throw std::invalid_argument("relevance_from_json: unknown mode '" + mode + "'");
    }
    o.layers = j.at("layers").get<std::vector<std::uint32_t>>();
    const std::string reduction = j.at("reduction").get<std::string>();
    if (reduction == "mean") {
        o.reduction = Reduction::Mean;
    } else if (reduction == "sum") {
        o.reduction = Reduction::Sum;
    } else {
        throw std::invalid_argument("relevance_from_json: unknown reduction");
    }
    return o;
}

}  // namespace

std::string relevance_to_json(const RelevanceMap& map) {
    json spans = json::array();
    for (const Span& s : map.spans) {
        spans.push_back(json::array({s.begin, s.end}));
    }
    json doc{
        {"version", 1},
        {"unit", map.unit == RelevanceMap::Unit::Token ? "token" : "chunk"},
        {"spans", std::move(spans)},
        {"scores", map.scores},
        {"baseline_loss", map.baseline_loss},
        {"target",
         {{"tokens", map.target.tokens.ids},
          {"origin", map.target.origin == ExplanationTarget::Origin::Explicit
                         ? "explicit"
                         : "generated"},
          {"steps", map.target.steps}}},
        {"options", options_to_json(map.options)},
    };
    return doc.dump();
}

RelevanceMap relevance_from_json(const std::string& text) {
    const json doc = json::parse(text);
    if (doc.at("version").get<int>() != 1) {
        throw std::invalid_argument("relevance_from_json: unsupported version");
    }
    RelevanceMap map;
    const std::string unit = doc.at("unit").get<std::string>();
    if (unit == "token") {
        map.unit = RelevanceMap::Unit::Token;
    } else if (unit == "chunk") {
        map.unit = RelevanceMap::Unit::Chunk;
    } else {
        throw std::invalid_argument("relevance_from_json: unknown unit '" + unit + "'");
    }
    for (const json& s : doc.at("spans")) {
        map.spans.push_back({s.at(0).get<std::uint32_t>(), s.at(1).get<std::uint32_t>()});
    }
    map.scores = doc.at("scores").get<std::vector<double>>();
    if (map.scores.size() != map.spans.size()) {
        throw std::invalid_argument("relevance_from_json: span/score count mismatch");
    }
    map.baseline_loss = doc.at("baseline_loss").get<double>();
    const json& target = doc.at("target");
    map.target.tokens.ids = target.at("tokens").get<std::vector<std::uint32_t>>();
    map.target.origin = target.at("origin").get<std::string>() == "explicit"
                            ? ExplanationTarget::Origin::Explicit
                            : ExplanationTarget::Origin::Generated;
    map.target.steps = target.at("steps").get<std::uint32_t>();
    map.options = options_from_json(doc.at("options"));
    return map;
}

}  // namespace atmn
