#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ontorel/aggregator.hpp"
#include "ontorel/encoder.hpp"

namespace ontorel {

struct Tensor {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> data;

  static Tensor zeros(std::string name, std::vector<std::size_t> dims);
  std::size_t size() const { return data.size(); }
  double& at(std::size_t r, std::size_t c) { return data[r * dims[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * dims[1] + c]; }
};

struct LinearLayer {
  Tensor weight;  // out x in
  Tensor bias;    // out
};

// Two-layer perceptron: relu (and inverted dropout in training) between the
// layers.
struct Perceptron {
  LinearLayer hidden, output;
};

struct ModelConfig {
  std::size_t state_dim = 64;  // d, node state width
  std::size_t layers = 2;      // K, propagation layers
  std::size_t hidden_width = 256;
  std::size_t word_dim = 50;
  std::size_t position_dim = 50;
  std::size_t encoding_dim = 50;  // text backend dimension
  std::size_t relation_count = 0;
  double dropout = 0.5;

  void validate() const;
};

// All learnable parameters in a fixed, named order.
struct ParamSet {
  Tensor word_table;      // |V| x word_dim
  Tensor position_table;  // 3 x position_dim
  std::vector<Perceptron> sentence_generators;  // K, input word+position dims
  std::vector<Perceptron> symbolic_generators;  // K, input 2*encoding_dim
  Perceptron classifier;                        // input K*d -> |R|

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  void fill(double value);
  void axpy(double alpha, const ParamSet& other);  // this += alpha * other
  double max_abs() const;
};

// Zero-initialized parameters with canonical tensor names and shapes.
ParamSet make_param_set(const ModelConfig& config, std::size_t vocab_size);

struct ModelState {
  ModelConfig config;
  std::vector<std::string> relation_labels;
  std::vector<std::string> vocab;  // word table rows
  std::unordered_map<std::string, std::uint32_t> vocab_index;
  ParamSet params;

  static ModelState init(ModelConfig config,
                         std::vector<std::string> relation_labels,
                         std::vector<std::string> vocab, Rng& rng);
  // Overwrites word rows found in the cache (GloVe-style initialization).
  // Returns the number of rows replaced.
  std::size_t load_word_vectors(const EmbeddingBackend& cache);
  ParamSet zero_grads() const;
};

// Throws DataError naming the first tensor containing a non-finite value.
void check_finite(const ParamSet& params, const char* what);

// ---------------------------------------------------------------------------
// Per-instance inputs. Entity node 0 is the head, node 1 the tail; the
// entity graph is the ordered pair both ways, so transition matrices are
// generated for (0,1) and (1,0). Classification and loss apply to the
// annotated (head, tail) pair: with two entities the elementwise-product
// pair feature is direction-symmetric, so the reverse pair carries no
// separate signal.

struct PreparedInstance {
  std::vector<std::int32_t> token_ids;           // -1 = out of vocabulary
  std::vector<std::vector<double>> oov_vectors;  // hashed, same slot as token
  Span head_span, tail_span;
  std::vector<double> symbolic_forward;  // En(SK) for (head, tail)
  std::vector<double> symbolic_reverse;  // En(SK) for (tail, head)
  std::vector<double> bias;              // |R|, weight already applied
  std::int32_t gold = -1;                // relation index; -1 = no loss
};

PreparedInstance prepare_instance(const ModelState& model,
                                  const SentenceInstance& instance,
                                  const SymbolicContext& context,
                                  const EmbeddingBackend& text_backend,
                                  const RelationVocabulary& relations,
                                  BiasMode mode, double bias_weight,
                                  bool mean_pool_paths);

// ---------------------------------------------------------------------------
// Low-level blocks, shared by the model forward and exposed for tests.

struct MlpCache {
  std::vector<double> input;
  std::vector<double> hidden_pre;    // before relu
  std::vector<double> hidden;        // after relu (+ dropout)
  std::vector<double> dropout_mask;  // empty when not training
  std::vector<double> output;
};

MlpCache mlp_forward(const Perceptron& mlp, std::span<const double> input,
                     bool training, double dropout, Rng* rng);

struct PerceptronGrads {
  Tensor* hidden_weight;
  Tensor* hidden_bias;
  Tensor* output_weight;
  Tensor* output_bias;
};

PerceptronGrads grads_of(Perceptron& mlp);

void mlp_backward(const Perceptron& mlp, const MlpCache& cache,
                  std::span<const double> d_output, PerceptronGrads grads,
                  std::vector<double>* d_input);

// Transition matrices for one ordered pair at one layer: M = SP + A, each
// d x d. An empty symbolic context still runs the generator on zeros.
struct TransitionEntry {
  std::vector<double> m;  // row-major d x d, m = a + sp
  MlpCache a_cache, sp_cache;

  std::span<const double> a() const { return a_cache.output; }
  std::span<const double> sp() const { return sp_cache.output; }
};

TransitionEntry generate_transitions(const Perceptron& sentence_generator,
                                     const Perceptron& symbolic_generator,
                                     std::span<const double> pooled_sentence,
                                     std::span<const double> symbolic_encoding,
                                     std::size_t state_dim, bool training,
                                     double dropout, Rng* rng);

// One propagation step over a fully connected entity graph:
//   next[s] = sum over o != s of relu(m[s][o] * states[o])
// m[s][o] is d x d row-major; diagonal entries are ignored.
std::vector<std::vector<double>> propagate(
    const std::vector<std::vector<std::vector<double>>>& m,
    const std::vector<std::vector<double>>& states);

// Concatenated elementwise products [h^1_s*h^1_o ; ... ; h^K_s*h^K_o] from
// states_per_layer[1..K] (index 0 is the initial state).
std::vector<double> pair_feature(
    const std::vector<std::vector<std::vector<double>>>& states_per_layer,
    std::size_t s, std::size_t o);

// Classifier logits for the given entity pair (evaluation mode).
std::vector<double> classify(
    const ModelState& model,
    const std::vector<std::vector<std::vector<double>>>& states_per_layer,
    std::size_t s, std::size_t o);

// ---------------------------------------------------------------------------
// Full forward/backward.

struct ForwardResult {
  std::vector<double> pooled_forward, pooled_reverse;  // generator inputs
  std::vector<TransitionEntry> trans_forward;  // per layer, M for (0,1)
  std::vector<TransitionEntry> trans_reverse;  // per layer, M for (1,0)
  std::vector<std::vector<std::vector<double>>> states;  // [0..K][node][d]
  std::vector<std::vector<double>> pre_head, pre_tail;   // per layer, pre-relu
  MlpCache classifier_cache;
  std::vector<double> logits;         // before bias
  std::vector<double> probabilities;  // softmax(logits + bias)
  double loss = 0.0;
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t dropout_seed = 0;
};

ForwardResult forward(const ModelState& model, const PreparedInstance& instance,
                      const ForwardOptions& options,
                      ClampCounter* clamps = nullptr);

// Analytic gradients for every parameter, accumulated into grads. Throws
// DataError identifying the tensor if any gradient is non-finite.
void backward(const ModelState& model, const PreparedInstance& instance,
              const ForwardResult& fwd, ParamSet& grads);

// ---------------------------------------------------------------------------
// Checkpointing: versioned binary dump of all parameter tensors with named
// shapes. Loading validates every shape against the stored config.

void save_checkpoint(const ModelState& model, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace ontorel
