#include "signrec/generation.hpp"

#include <algorithm>
#include <cctype>
#include <future>

#include <nlohmann/json.hpp>

#include "signrec/errors.hpp"
#include "signrec/util.hpp"

namespace signrec {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::optional<SignCode> oracle_answer(const AugmentedPrompt& prompt,
                                      const std::optional<SignCode>& truth) {
  if (!truth) return prompt.candidate_codes.front();
  for (const auto& code : prompt.candidate_codes) {
    if (code == *truth) return code;
  }
  return std::nullopt;
}

template <typename Fn>
auto run_stage(Stage stage, Fn&& fn) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e.kind(), e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, ErrorKind::internal, e.what());
  }
}

}  // namespace

OracleGenerator::OracleGenerator(std::chrono::microseconds delay) : delay_(delay) {}

std::string OracleGenerator::generate(const AugmentedPrompt& prompt,
                                      const std::optional<SignCode>& truth_hint) {
  if (delay_.count() > 0) util::precise_sleep(delay_);
  if (prompt.candidate_codes.empty()) {
    throw Error(ErrorKind::validation, "prompt has no candidates");
  }
  auto answer = oracle_answer(prompt, truth_hint);
  return answer ? answer->value : "NONE";
}

std::string OracleGenerator::generate_direct(const ImageRef&, const std::string&,
                                             const std::vector<SignCode>& codes,
                                             const std::optional<SignCode>& truth_hint) {
  if (delay_.count() > 0) util::precise_sleep(delay_);
  if (!truth_hint) return "NONE";
  for (const auto& code : codes) {
    if (code == *truth_hint) return code.value;
  }
  return "NONE";
}

std::string OracleGenerator::id() const { return "oracle-mock"; }

NoisyGenerator::NoisyGenerator(double flip_probability, std::uint64_t seed,
                               std::chrono::microseconds delay)
    : p_(flip_probability), seed_(seed), delay_(delay) {
  if (p_ < 0.0 || p_ > 1.0) {
    throw Error(ErrorKind::config, "flip probability must be in [0, 1]");
  }
}

std::string NoisyGenerator::generate(const AugmentedPrompt& prompt,
                                     const std::optional<SignCode>& truth_hint) {
  if (delay_.count() > 0) util::precise_sleep(delay_);
  if (prompt.candidate_codes.empty()) {
    throw Error(ErrorKind::validation, "prompt has no candidates");
  }
  auto answer = oracle_answer(prompt, truth_hint);

  std::uint64_t key = util::mix64(util::mix64(seed_, static_cast<std::uint64_t>(run_index_)),
                                  util::fnv1a64(prompt.text));
  util::DetRng rng(key);
  if (rng.next_double() >= p_) {
    return answer ? answer->value : "NONE";
  }

  // flip: answer with a different candidate
  std::vector<const SignCode*> others;
  for (const auto& code : prompt.candidate_codes) {
    if (!answer || !(code == *answer)) others.push_back(&code);
  }
  if (others.empty()) return answer ? answer->value : "NONE";
  return others[rng.next_below(others.size())]->value;
}

std::string NoisyGenerator::generate_direct(const ImageRef& image, const std::string& scope,
                                            const std::vector<SignCode>& codes,
                                            const std::optional<SignCode>& truth_hint) {
  if (delay_.count() > 0) util::precise_sleep(delay_);
  std::uint64_t key = util::mix64(util::mix64(seed_, static_cast<std::uint64_t>(run_index_)),
                                  image.content_hash() ^ util::fnv1a64(scope));
  util::DetRng rng(key);
  std::optional<SignCode> answer;
  if (truth_hint) {
    for (const auto& code : codes) {
      if (code == *truth_hint) answer = code;
    }
  }
  if (rng.next_double() >= p_) {
    return answer ? answer->value : "NONE";
  }
  std::vector<const SignCode*> others;
  for (const auto& code : codes) {
    if (!answer || !(code == *answer)) others.push_back(&code);
  }
  if (others.empty()) return answer ? answer->value : "NONE";
  return others[rng.next_below(others.size())]->value;
}

std::string NoisyGenerator::id() const {
  return "noisy-mock(p=" + std::to_string(p_) + ",seed=" + std::to_string(seed_) + ")";
}

std::string normalize_model_output(std::string_view raw) {
  // first non-empty line carries the answer
  std::string line;
  for (const auto& candidate : util::split(raw, '\n')) {
    line = util::trim(candidate);
    if (!line.empty()) break;
  }
  std::string lower = util::to_lower(line);
  if (lower.rfind("answer:", 0) == 0) {
    line = util::trim(line.substr(7));
  }
  std::string out;
  for (char c : line) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-') {
      out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

ClassifyResult classify(const AugmentedPrompt& prompt, GeneratorBackend& backend,
                        const std::optional<SignCode>& truth_hint) {
  if (prompt.candidate_codes.empty()) {
    throw Error(ErrorKind::validation, "prompt has no candidates");
  }
  ClassifyResult result;
  result.raw_output =
      run_stage(Stage::generation, [&] { return backend.generate(prompt, truth_hint); });

  std::string normalized = normalize_model_output(result.raw_output);
  if (normalized == "NONE") {
    result.code = std::nullopt;
    return result;
  }
  for (const auto& code : prompt.candidate_codes) {
    if (normalized == normalize_model_output(code.value)) {
      result.code = code;
      return result;
    }
  }
  // unparseable or out-of-vocabulary output: availability over abstention
  result.code = prompt.candidate_codes.front();
  result.used_fallback = true;
  return result;
}

DirectResult classify_direct(const ImageRef& image, const std::string& scope_description,
                             const std::vector<SignCode>& codes, GeneratorBackend& backend,
                             const std::optional<SignCode>& truth_hint) {
  if (codes.empty()) {
    throw Error(ErrorKind::validation, "direct classification needs a non-empty code list");
  }
  DirectResult result;
  result.raw_output = run_stage(Stage::generation, [&] {
    return backend.generate_direct(image, scope_description, codes, truth_hint);
  });
  std::string normalized = normalize_model_output(result.raw_output);
  if (normalized == "NONE") return result;
  for (const auto& code : codes) {
    if (normalized == normalize_model_output(code.value)) {
      result.code = code;
      return result;
    }
  }
  return result;  // outside the catalog vocabulary: rejected
}

std::string_view to_string(OutcomeSource source) {
  switch (source) {
    case OutcomeSource::generation: return "generation";
    case OutcomeSource::top1_fallback: return "top1-fallback";
    case OutcomeSource::scope_filter: return "scope-filter";
  }
  return "unknown";
}

namespace {

OutcomeSource source_from_string(std::string_view s) {
  if (s == "generation") return OutcomeSource::generation;
  if (s == "top1-fallback") return OutcomeSource::top1_fallback;
  if (s == "scope-filter") return OutcomeSource::scope_filter;
  throw Error(ErrorKind::parse, "unknown outcome source: " + std::string(s));
}

// everything after the scene description, for one sign
RecognitionOutcome recognize_one(const SignDescription& description, const VectorStore& store,
                                 const Backends& backends, const RecognizeOptions& options,
                                 double descriptor_ms) {
  RecognitionOutcome outcome;
  outcome.timings.descriptor_ms = descriptor_ms;
  auto sign_start = Clock::now();

  try {
    auto embed_start = Clock::now();
    EmbeddingVector query = run_stage(Stage::embedder, [&] {
      return backends.embedder->embed(description.appearance);
    });
    outcome.timings.embed_ms = elapsed_ms(embed_start);

    auto query_start = Clock::now();
    if (options.injected_store_delay.count() > 0) {
      util::precise_sleep(options.injected_store_delay);
    }
    outcome.retrieval.query_description = description;
    outcome.retrieval.k = options.k;
    outcome.retrieval.hits =
        run_stage(Stage::store, [&] { return store.query(query, options.k); });
    outcome.timings.store_query_ms = elapsed_ms(query_start);

    if (options.scope_filter != nullptr &&
        apply_filter(*options.scope_filter, outcome.retrieval) == FilterDecision::reject) {
      outcome.final_code = std::nullopt;
      outcome.source = OutcomeSource::scope_filter;
      outcome.timings.total_ms = descriptor_ms + elapsed_ms(sign_start);
      return outcome;
    }

    auto generation_start = Clock::now();
    outcome.prompt = build_prompt(description, outcome.retrieval, store,
                                  options.template_version);
    ClassifyResult result = classify(outcome.prompt, *backends.generator, options.truth_hint);
    outcome.timings.generation_ms = elapsed_ms(generation_start);

    outcome.final_code = result.code;
    outcome.raw_model_output = result.raw_output;
    outcome.source =
        result.used_fallback ? OutcomeSource::top1_fallback : OutcomeSource::generation;
  } catch (const StageError& e) {
    outcome.final_code = std::nullopt;
    outcome.error = e.what();
  }
  outcome.timings.total_ms = descriptor_ms + elapsed_ms(sign_start);
  return outcome;
}

}  // namespace

std::vector<RecognitionOutcome> recognize(const ImageRef& image, const VectorStore& store,
                                          const Backends& backends,
                                          const RecognizeOptions& options) {
  if (backends.descriptor == nullptr || backends.embedder == nullptr ||
      backends.generator == nullptr) {
    throw Error(ErrorKind::config, "recognize requires descriptor, embedder and generator");
  }
  if (store.size() == 0) {
    throw Error(ErrorKind::validation, "recognize against empty store");
  }
  if (options.k == 0) {
    throw Error(ErrorKind::validation, "k must be at least 1");
  }

  auto descriptor_start = Clock::now();
  auto descriptions = run_stage(Stage::descriptor, [&] {
    return backends.descriptor->describe_scene(image);
  });
  double descriptor_ms = elapsed_ms(descriptor_start);

  std::vector<RecognitionOutcome> outcomes;
  if (descriptions.empty()) return outcomes;

  if (descriptions.size() == 1) {
    outcomes.push_back(
        recognize_one(descriptions.front(), store, backends, options, descriptor_ms));
    return outcomes;
  }

  std::vector<std::future<RecognitionOutcome>> futures;
  futures.reserve(descriptions.size());
  for (const auto& description : descriptions) {
    futures.push_back(std::async(std::launch::async, [&, description] {
      return recognize_one(description, store, backends, options, descriptor_ms);
    }));
  }
  outcomes.reserve(futures.size());
  for (auto& f : futures) outcomes.push_back(f.get());
  return outcomes;
}

std::string outcome_to_json(const RecognitionOutcome& outcome) {
  nlohmann::ordered_json j;
  j["final_code"] = outcome.final_code ? outcome.final_code->value : "REJECTED";
  j["source"] = std::string(to_string(outcome.source));
  j["query"] = {{"appearance", outcome.retrieval.query_description.appearance},
                {"location", outcome.retrieval.query_description.location
                                 ? nlohmann::json(*outcome.retrieval.query_description.location)
                                 : nlohmann::json(nullptr)}};
  j["k"] = outcome.retrieval.k;
  auto hits = nlohmann::ordered_json::array();
  for (const auto& hit : outcome.retrieval.hits) {
    hits.push_back({{"code", hit.code.value}, {"distance", hit.distance}, {"rank", hit.rank}});
  }
  j["hits"] = std::move(hits);
  j["template_version"] = outcome.prompt.template_version;
  auto candidates = nlohmann::ordered_json::array();
  for (const auto& code : outcome.prompt.candidate_codes) candidates.push_back(code.value);
  j["candidate_codes"] = std::move(candidates);
  j["raw_model_output"] = outcome.raw_model_output;
  j["timings_ms"] = {{"descriptor", outcome.timings.descriptor_ms},
                     {"embed", outcome.timings.embed_ms},
                     {"store_query", outcome.timings.store_query_ms},
                     {"generation", outcome.timings.generation_ms},
                     {"total", outcome.timings.total_ms}};
  if (outcome.error) j["error"] = *outcome.error;
  return j.dump();
}

RecognitionOutcome outcome_from_json(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("invalid outcome record: ") + e.what());
  }
  RecognitionOutcome outcome;
  std::string code = j.at("final_code").get<std::string>();
  if (code != "REJECTED") outcome.final_code = SignCode{code};
  outcome.source = source_from_string(j.at("source").get<std::string>());
  outcome.retrieval.query_description.appearance =
      j.at("query").at("appearance").get<std::string>();
  if (!j.at("query").at("location").is_null()) {
    outcome.retrieval.query_description.location =
        j.at("query").at("location").get<std::string>();
  }
  outcome.retrieval.k = j.at("k").get<std::size_t>();
  for (const auto& hit : j.at("hits")) {
    QueryHit h;
    h.code = SignCode{hit.at("code").get<std::string>()};
    h.distance = hit.at("distance").get<double>();
    h.rank = hit.at("rank").get<int>();
    outcome.retrieval.hits.push_back(std::move(h));
  }
  outcome.prompt.template_version = j.at("template_version").get<std::string>();
  for (const auto& c : j.at("candidate_codes")) {
    outcome.prompt.candidate_codes.push_back(SignCode{c.get<std::string>()});
  }
  outcome.raw_model_output = j.at("raw_model_output").get<std::string>();
  const auto& t = j.at("timings_ms");
  outcome.timings.descriptor_ms = t.at("descriptor").get<double>();
  outcome.timings.embed_ms = t.at("embed").get<double>();
  outcome.timings.store_query_ms = t.at("store_query").get<double>();
  outcome.timings.generation_ms = t.at("generation").get<double>();
  outcome.timings.total_ms = t.at("total").get<double>();
  if (j.contains("error")) outcome.error = j.at("error").get<std::string>();
  return outcome;
}

}  // namespace signrec
