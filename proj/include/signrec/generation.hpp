#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "signrec/augmentation.hpp"
#include "signrec/retrieval.hpp"
#include "signrec/scope_filter.hpp"

namespace signrec {

class GeneratorBackend {
 public:
  virtual ~GeneratorBackend() = default;

  // Raw model text answering the augmented prompt. Mock backends consult the
  // truth hint supplied by the evaluation harness; remote backends ignore it.
  virtual std::string generate(const AugmentedPrompt& prompt,
                               const std::optional<SignCode>& truth_hint) = 0;

  // End-to-end baseline: answer from the image alone given a scope
  // description and the full catalog code list, no retrieval.
  virtual std::string generate_direct(const ImageRef& image, const std::string& scope,
                                      const std::vector<SignCode>& codes,
                                      const std::optional<SignCode>& truth_hint) = 0;

  virtual std::string id() const = 0;

  // Called by the evaluation harness before each repetition; stochastic mocks
  // salt their decisions with it so repeated runs vary like a sampled model.
  virtual void begin_run(int /*run_index*/) {}
};

// Answers with the true code whenever it appears among the candidates, NONE
// otherwise. Isolates retrieval error from generation error. Without a truth
// hint it reads out the rank-1 candidate.
class OracleGenerator : public GeneratorBackend {
 public:
  explicit OracleGenerator(
      std::chrono::microseconds delay = std::chrono::microseconds::zero());

  std::string generate(const AugmentedPrompt& prompt,
                       const std::optional<SignCode>& truth_hint) override;
  std::string generate_direct(const ImageRef& image, const std::string& scope,
                              const std::vector<SignCode>& codes,
                              const std::optional<SignCode>& truth_hint) override;
  std::string id() const override;

 private:
  std::chrono::microseconds delay_;
};

// Oracle that flips its answer to a different candidate with probability p.
// The flip decision is a pure hash of (seed, run index, prompt text), so
// evaluation stays deterministic and order-independent.
class NoisyGenerator : public GeneratorBackend {
 public:
  NoisyGenerator(double flip_probability, std::uint64_t seed,
                 std::chrono::microseconds delay = std::chrono::microseconds::zero());

  std::string generate(const AugmentedPrompt& prompt,
                       const std::optional<SignCode>& truth_hint) override;
  std::string generate_direct(const ImageRef& image, const std::string& scope,
                              const std::vector<SignCode>& codes,
                              const std::optional<SignCode>& truth_hint) override;
  std::string id() const override;
  void begin_run(int run_index) override { run_index_ = run_index; }

 private:
  double p_;
  std::uint64_t seed_;
  std::chrono::microseconds delay_;
  int run_index_ = 0;
};

// trim, case-fold, strip punctuation; empty result when nothing code-like
// survives
std::string normalize_model_output(std::string_view raw);

struct ClassifyResult {
  std::optional<SignCode> code;  // nullopt == REJECTED
  std::string raw_output;
  bool used_fallback = false;  // rank-1 fallback after unparseable output
};

// Closed-vocabulary classification: the returned code is always one of the
// prompt's candidates or REJECTED. Output matching no candidate after
// normalization falls back to the rank-1 candidate, flagged so metrics can be
// broken down by source.
ClassifyResult classify(const AugmentedPrompt& prompt, GeneratorBackend& backend,
                        const std::optional<SignCode>& truth_hint = std::nullopt);

struct DirectResult {
  std::optional<SignCode> code;
  std::string raw_output;
};

// Single-shot baseline without retrieval; output must match one of the
// catalog codes, anything else is a rejection.
DirectResult classify_direct(const ImageRef& image, const std::string& scope_description,
                             const std::vector<SignCode>& codes, GeneratorBackend& backend,
                             const std::optional<SignCode>& truth_hint = std::nullopt);

enum class OutcomeSource { generation, top1_fallback, scope_filter };
std::string_view to_string(OutcomeSource source);

struct StageTimings {
  double descriptor_ms = 0.0;
  double embed_ms = 0.0;
  double store_query_ms = 0.0;
  double generation_ms = 0.0;
  double total_ms = 0.0;
};

struct RecognitionOutcome {
  std::optional<SignCode> final_code;  // nullopt == REJECTED
  OutcomeSource source = OutcomeSource::generation;
  RetrievalSet retrieval;
  AugmentedPrompt prompt;  // empty when the scope filter rejected pre-prompt
  std::string raw_model_output;
  StageTimings timings;
  std::optional<std::string> error;  // stage-tagged failure, other signs unaffected

  bool rejected() const { return !final_code.has_value(); }
};

struct RecognizeOptions {
  std::size_t k = kDefaultTopK;
  const FilterModel* scope_filter = nullptr;
  std::string template_version = TemplateRegistry::default_version();
  std::optional<SignCode> truth_hint;
  // bench instrumentation: extra latency charged to the store-query stage
  std::chrono::microseconds injected_store_delay{0};
};

// Full pipeline per sign in the scene: retrieve, scope-filter (when enabled),
// build prompt, classify. Signs are processed independently; a failure in one
// is recorded on its outcome and never aborts the others.
std::vector<RecognitionOutcome> recognize(const ImageRef& image, const VectorStore& store,
                                          const Backends& backends,
                                          const RecognizeOptions& options = {});

// line-delimited outcome records consumed by the evaluation harness
std::string outcome_to_json(const RecognitionOutcome& outcome);
RecognitionOutcome outcome_from_json(const std::string& line);

}  // namespace signrec
