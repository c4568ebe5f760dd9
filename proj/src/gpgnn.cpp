#include "ontorel/gpgnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace ontorel {

namespace {

// y += W * x  (W is rows x cols, row-major)
void matvec_add(const Tensor& w, std::span<const double> x, double* y) {
  const std::size_t rows = w.dims[0], cols = w.dims[1];
  const double* wd = w.data.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = wd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += W^T * g
void matvec_transpose_add(const Tensor& w, std::span<const double> g, double* y) {
  const std::size_t rows = w.dims[0], cols = w.dims[1];
  const double* wd = w.data.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = wd + r * cols;
    const double gr = g[r];
    if (gr == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) y[c] += row[c] * gr;
  }
}

// W += g (outer) x
void outer_add(Tensor& w, std::span<const double> g, std::span<const double> x) {
  const std::size_t rows = w.dims[0], cols = w.dims[1];
  double* wd = w.data.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* row = wd + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

Perceptron make_perceptron(const std::string& prefix, std::size_t in,
                           std::size_t hidden, std::size_t out) {
  Perceptron p;
  p.hidden.weight = Tensor::zeros(prefix + "_hidden_weight", {hidden, in});
  p.hidden.bias = Tensor::zeros(prefix + "_hidden_bias", {hidden});
  p.output.weight = Tensor::zeros(prefix + "_output_weight", {out, hidden});
  p.output.bias = Tensor::zeros(prefix + "_output_bias", {out});
  return p;
}

void glorot_init(Tensor& w, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(w.dims[0] + w.dims[1]));
  for (double& x : w.data) x = rng.uniform(-limit, limit);
}

void init_perceptron(Perceptron& p, Rng& rng) {
  glorot_init(p.hidden.weight, rng);
  glorot_init(p.output.weight, rng);
}

void collect(Perceptron& p, std::vector<Tensor*>& out) {
  out.push_back(&p.hidden.weight);
  out.push_back(&p.hidden.bias);
  out.push_back(&p.output.weight);
  out.push_back(&p.output.bias);
}

}  // namespace

Tensor Tensor::zeros(std::string name, std::vector<std::size_t> dims) {
  Tensor t;
  t.name = std::move(name);
  t.dims = std::move(dims);
  std::size_t total = 1;
  for (auto d : t.dims) total *= d;
  t.data.assign(total, 0.0);
  return t;
}

void ModelConfig::validate() const {
  if (state_dim < 2) throw DataError("state_dim must be at least 2");
  if (layers < 1) throw DataError("layers must be at least 1");
  if (hidden_width < 1) throw DataError("hidden_width must be at least 1");
  if (word_dim < 1 || position_dim < 1 || encoding_dim < 1)
    throw DataError("embedding dimensions must be at least 1");
  if (relation_count < 1) throw DataError("relation_count must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw DataError("dropout must be in [0, 1)");
}

std::vector<Tensor*> ParamSet::tensors() {
  std::vector<Tensor*> out;
  out.push_back(&word_table);
  out.push_back(&position_table);
  for (auto& p : sentence_generators) collect(p, out);
  for (auto& p : symbolic_generators) collect(p, out);
  collect(classifier, out);
  return out;
}

std::vector<const Tensor*> ParamSet::tensors() const {
  auto mutable_list = const_cast<ParamSet*>(this)->tensors();
  return {mutable_list.begin(), mutable_list.end()};
}

void ParamSet::fill(double value) {
  for (auto* t : tensors())
    std::fill(t->data.begin(), t->data.end(), value);
}

void ParamSet::axpy(double alpha, const ParamSet& other) {
  auto mine = tensors();
  auto theirs = other.tensors();
  for (std::size_t i = 0; i < mine.size(); ++i) {
    auto& a = mine[i]->data;
    const auto& b = theirs[i]->data;
    for (std::size_t j = 0; j < a.size(); ++j) a[j] += alpha * b[j];
  }
}

double ParamSet::max_abs() const {
  double best = 0.0;
  for (const auto* t : tensors())
    for (double x : t->data) best = std::max(best, std::abs(x));
  return best;
}

ParamSet make_param_set(const ModelConfig& config, std::size_t vocab_size) {
  ParamSet params;
  params.word_table = Tensor::zeros("word_table", {vocab_size, config.word_dim});
  params.position_table =
      Tensor::zeros("position_table", {3, config.position_dim});
  const std::size_t sentence_in = config.word_dim + config.position_dim;
  const std::size_t symbolic_in = 2 * config.encoding_dim;
  const std::size_t mat = config.state_dim * config.state_dim;
  for (std::size_t k = 0; k < config.layers; ++k) {
    params.sentence_generators.push_back(
        make_perceptron("sentence_generator_" + std::to_string(k), sentence_in,
                        config.hidden_width, mat));
    params.symbolic_generators.push_back(
        make_perceptron("symbolic_generator_" + std::to_string(k), symbolic_in,
                        config.hidden_width, mat));
  }
  params.classifier =
      make_perceptron("classifier", config.layers * config.state_dim,
                      config.hidden_width, config.relation_count);
  return params;
}

ModelState ModelState::init(ModelConfig config,
                            std::vector<std::string> relation_labels,
                            std::vector<std::string> vocab, Rng& rng) {
  config.relation_count = relation_labels.size();
  config.validate();
  ModelState m;
  m.config = config;
  m.relation_labels = std::move(relation_labels);
  m.vocab = std::move(vocab);
  for (std::uint32_t i = 0; i < m.vocab.size(); ++i) {
    if (!m.vocab_index.emplace(m.vocab[i], i).second)
      throw DataError("duplicate vocabulary token: " + m.vocab[i]);
  }
  m.params = make_param_set(m.config, m.vocab.size());
  // word rows: deterministic hashed vectors, replaceable by a loaded cache
  for (std::size_t i = 0; i < m.vocab.size(); ++i) {
    auto v = hashed_embed(m.vocab[i], m.config.word_dim);
    std::copy(v.begin(), v.end(),
              m.params.word_table.data.begin() + i * m.config.word_dim);
  }
  for (double& x : m.params.position_table.data) x = rng.uniform(-0.1, 0.1);
  for (auto& p : m.params.sentence_generators) init_perceptron(p, rng);
  for (auto& p : m.params.symbolic_generators) init_perceptron(p, rng);
  init_perceptron(m.params.classifier, rng);
  return m;
}

std::size_t ModelState::load_word_vectors(const EmbeddingBackend& cache) {
  if (cache.dimension() != config.word_dim)
    throw DataError("word vector dimension " +
                    std::to_string(cache.dimension()) + " does not match " +
                    std::to_string(config.word_dim));
  std::size_t loaded = 0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (!cache.contains(vocab[i])) continue;
    auto v = cache.embed(vocab[i]);
    std::copy(v.begin(), v.end(),
              params.word_table.data.begin() + i * config.word_dim);
    ++loaded;
  }
  return loaded;
}

ParamSet ModelState::zero_grads() const {
  return make_param_set(config, vocab.size());
}

void check_finite(const ParamSet& params, const char* what) {
  for (const auto* t : params.tensors()) {
    for (double x : t->data) {
      if (!std::isfinite(x))
        throw DataError(std::string(what) + ": non-finite value in tensor '" +
                        t->name + "'");
    }
  }
}

PreparedInstance prepare_instance(const ModelState& model,
                                  const SentenceInstance& instance,
                                  const SymbolicContext& context,
                                  const EmbeddingBackend& text_backend,
                                  const RelationVocabulary& relations,
                                  BiasMode mode, double bias_weight,
                                  bool mean_pool_paths) {
  instance.validate();
  if (text_backend.dimension() != model.config.encoding_dim)
    throw DataError("text backend dimension does not match model config");
  PreparedInstance prep;
  prep.token_ids.reserve(instance.tokens.size());
  prep.oov_vectors.resize(instance.tokens.size());
  for (std::size_t t = 0; t < instance.tokens.size(); ++t) {
    auto it = model.vocab_index.find(instance.tokens[t]);
    if (it != model.vocab_index.end()) {
      prep.token_ids.push_back(static_cast<std::int32_t>(it->second));
    } else {
      prep.token_ids.push_back(-1);
      prep.oov_vectors[t] = hashed_embed(instance.tokens[t], model.config.word_dim);
    }
  }
  prep.head_span = instance.head_span;
  prep.tail_span = instance.tail_span;
  prep.symbolic_forward = encode_symbolic(context, text_backend, mean_pool_paths);
  prep.symbolic_reverse =
      encode_symbolic(reversed_view(context), text_backend, mean_pool_paths);
  prep.bias = bias_score(relations, context, text_backend, mode, bias_weight).bias;
  if (!instance.gold_relation.empty()) {
    auto gold = relations.index_of(instance.gold_relation);
    if (!gold)
      throw DataError("relation label not in vocabulary: " +
                      instance.gold_relation);
    prep.gold = static_cast<std::int32_t>(*gold);
  }
  return prep;
}

MlpCache mlp_forward(const Perceptron& mlp, std::span<const double> input,
                     bool training, double dropout, Rng* rng) {
  if (input.size() != mlp.hidden.weight.dims[1])
    throw DataError("perceptron input size mismatch: got " +
                    std::to_string(input.size()) + ", expected " +
                    std::to_string(mlp.hidden.weight.dims[1]));
  MlpCache cache;
  cache.input.assign(input.begin(), input.end());
  const std::size_t h = mlp.hidden.weight.dims[0];
  cache.hidden_pre = mlp.hidden.bias.data;
  matvec_add(mlp.hidden.weight, input, cache.hidden_pre.data());
  cache.hidden.resize(h);
  for (std::size_t i = 0; i < h; ++i)
    cache.hidden[i] = cache.hidden_pre[i] > 0.0 ? cache.hidden_pre[i] : 0.0;
  if (training && dropout > 0.0) {
    if (!rng) throw DataError("training forward requires an rng for dropout");
    cache.dropout_mask.resize(h);
    const double keep = 1.0 - dropout;
    for (std::size_t i = 0; i < h; ++i) {
      cache.dropout_mask[i] = rng->uniform() < dropout ? 0.0 : 1.0 / keep;
      cache.hidden[i] *= cache.dropout_mask[i];
    }
  }
  cache.output = mlp.output.bias.data;
  matvec_add(mlp.output.weight, cache.hidden, cache.output.data());
  return cache;
}

PerceptronGrads grads_of(Perceptron& mlp) {
  return {&mlp.hidden.weight, &mlp.hidden.bias, &mlp.output.weight,
          &mlp.output.bias};
}

void mlp_backward(const Perceptron& mlp, const MlpCache& cache,
                  std::span<const double> d_output, PerceptronGrads grads,
                  std::vector<double>* d_input) {
  const std::size_t h = cache.hidden.size();
  for (std::size_t i = 0; i < d_output.size(); ++i)
    grads.output_bias->data[i] += d_output[i];
  outer_add(*grads.output_weight, d_output, cache.hidden);

  std::vector<double> d_hidden(h, 0.0);
  matvec_transpose_add(mlp.output.weight, d_output, d_hidden.data());
  if (!cache.dropout_mask.empty()) {
    for (std::size_t i = 0; i < h; ++i) d_hidden[i] *= cache.dropout_mask[i];
  }
  for (std::size_t i = 0; i < h; ++i) {
    if (cache.hidden_pre[i] <= 0.0) d_hidden[i] = 0.0;
  }
  for (std::size_t i = 0; i < h; ++i)
    grads.hidden_bias->data[i] += d_hidden[i];
  outer_add(*grads.hidden_weight, d_hidden, cache.input);
  if (d_input) {
    d_input->assign(cache.input.size(), 0.0);
    matvec_transpose_add(mlp.hidden.weight, d_hidden, d_input->data());
  }
}

TransitionEntry generate_transitions(const Perceptron& sentence_generator,
                                     const Perceptron& symbolic_generator,
                                     std::span<const double> pooled_sentence,
                                     std::span<const double> symbolic_encoding,
                                     std::size_t state_dim, bool training,
                                     double dropout, Rng* rng) {
  TransitionEntry entry;
  entry.a_cache =
      mlp_forward(sentence_generator, pooled_sentence, training, dropout, rng);
  entry.sp_cache =
      mlp_forward(symbolic_generator, symbolic_encoding, training, dropout, rng);
  const std::size_t mat = state_dim * state_dim;
  if (entry.a_cache.output.size() != mat || entry.sp_cache.output.size() != mat)
    throw DataError("generator output does not match state_dim^2");
  entry.m.resize(mat);
  for (std::size_t i = 0; i < mat; ++i)
    entry.m[i] = entry.a_cache.output[i] + entry.sp_cache.output[i];
  return entry;
}

std::vector<std::vector<double>> propagate(
    const std::vector<std::vector<std::vector<double>>>& m,
    const std::vector<std::vector<double>>& states) {
  const std::size_t nodes = states.size();
  if (m.size() != nodes) throw DataError("transition/state node count mismatch");
  std::vector<std::vector<double>> next(nodes);
  for (std::size_t s = 0; s < nodes; ++s) {
    const std::size_t d = states[s].size();
    next[s].assign(d, 0.0);
    for (std::size_t o = 0; o < nodes; ++o) {
      if (o == s) continue;
      const auto& mat = m[s][o];
      if (mat.size() != d * d) throw DataError("transition matrix shape mismatch");
      for (std::size_t r = 0; r < d; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) acc += mat[r * d + c] * states[o][c];
        next[s][r] += acc > 0.0 ? acc : 0.0;  // relu applied inside the sum
      }
    }
  }
  return next;
}

std::vector<double> pair_feature(
    const std::vector<std::vector<std::vector<double>>>& states_per_layer,
    std::size_t s, std::size_t o) {
  if (states_per_layer.size() < 2)
    throw DataError("pair_feature needs at least one propagated layer");
  std::vector<double> z;
  for (std::size_t n = 1; n < states_per_layer.size(); ++n) {
    const auto& hs = states_per_layer[n][s];
    const auto& ho = states_per_layer[n][o];
    for (std::size_t i = 0; i < hs.size(); ++i) z.push_back(hs[i] * ho[i]);
  }
  return z;
}

std::vector<double> classify(
    const ModelState& model,
    const std::vector<std::vector<std::vector<double>>>& states_per_layer,
    std::size_t s, std::size_t o) {
  auto z = pair_feature(states_per_layer, s, o);
  auto cache = mlp_forward(model.params.classifier, z, false, 0.0, nullptr);
  return cache.output;
}

ForwardResult forward(const ModelState& model, const PreparedInstance& instance,
                      const ForwardOptions& options, ClampCounter* clamps) {
  const auto& cfg = model.config;
  const std::size_t d = cfg.state_dim;
  const std::size_t dw = cfg.word_dim;
  const std::size_t din = dw + cfg.position_dim;
  const std::size_t tokens = instance.token_ids.size();
  if (tokens == 0) throw DataError("instance has no tokens");

  ForwardResult fwd;
  Rng rng(options.dropout_seed);
  Rng* rng_ptr = options.training ? &rng : nullptr;

  // Eq. 1 pooling: mean over tokens of [word ; position], positions taken
  // relative to the ordered pair.
  fwd.pooled_forward.assign(din, 0.0);
  fwd.pooled_reverse.assign(din, 0.0);
  const double inv_t = 1.0 / static_cast<double>(tokens);
  for (std::size_t t = 0; t < tokens; ++t) {
    const double* w = instance.token_ids[t] >= 0
                          ? model.params.word_table.data.data() +
                                static_cast<std::size_t>(instance.token_ids[t]) * dw
                          : instance.oov_vectors[t].data();
    for (std::size_t i = 0; i < dw; ++i) {
      fwd.pooled_forward[i] += w[i] * inv_t;
      fwd.pooled_reverse[i] += w[i] * inv_t;
    }
    auto cat_f = position_category(t, instance.head_span, instance.tail_span);
    auto cat_r = position_category(t, instance.tail_span, instance.head_span);
    const double* pf = model.params.position_table.data.data() +
                       static_cast<std::size_t>(cat_f) * cfg.position_dim;
    const double* pr = model.params.position_table.data.data() +
                       static_cast<std::size_t>(cat_r) * cfg.position_dim;
    for (std::size_t i = 0; i < cfg.position_dim; ++i) {
      fwd.pooled_forward[dw + i] += pf[i] * inv_t;
      fwd.pooled_reverse[dw + i] += pr[i] * inv_t;
    }
  }

  // initial states: one-hot by entity index
  fwd.states.resize(cfg.layers + 1);
  fwd.states[0] = {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  fwd.states[0][0][0] = 1.0;
  fwd.states[0][1][1] = 1.0;

  for (std::size_t n = 0; n < cfg.layers; ++n) {
    fwd.trans_forward.push_back(generate_transitions(
        model.params.sentence_generators[n], model.params.symbolic_generators[n],
        fwd.pooled_forward, instance.symbolic_forward, d, options.training,
        cfg.dropout, rng_ptr));
    fwd.trans_reverse.push_back(generate_transitions(
        model.params.sentence_generators[n], model.params.symbolic_generators[n],
        fwd.pooled_reverse, instance.symbolic_reverse, d, options.training,
        cfg.dropout, rng_ptr));

    // h_head' = relu(M_{head,tail} h_tail), h_tail' = relu(M_{tail,head} h_head)
    std::vector<double> pre_h(d, 0.0), pre_t(d, 0.0);
    const auto& mh = fwd.trans_forward[n].m;
    const auto& mt = fwd.trans_reverse[n].m;
    const auto& h_tail = fwd.states[n][1];
    const auto& h_head = fwd.states[n][0];
    for (std::size_t r = 0; r < d; ++r) {
      double acc_h = 0.0, acc_t = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        acc_h += mh[r * d + c] * h_tail[c];
        acc_t += mt[r * d + c] * h_head[c];
      }
      pre_h[r] = acc_h;
      pre_t[r] = acc_t;
    }
    fwd.states[n + 1] = {std::vector<double>(d), std::vector<double>(d)};
    for (std::size_t r = 0; r < d; ++r) {
      fwd.states[n + 1][0][r] = pre_h[r] > 0.0 ? pre_h[r] : 0.0;
      fwd.states[n + 1][1][r] = pre_t[r] > 0.0 ? pre_t[r] : 0.0;
    }
    fwd.pre_head.push_back(std::move(pre_h));
    fwd.pre_tail.push_back(std::move(pre_t));
  }

  auto z = pair_feature(fwd.states, 0, 1);
  fwd.classifier_cache = mlp_forward(model.params.classifier, z,
                                     options.training, cfg.dropout, rng_ptr);
  fwd.logits = fwd.classifier_cache.output;
  fwd.probabilities = predict(fwd.logits, instance.bias);
  if (instance.gold >= 0) {
    fwd.loss = nll_loss(fwd.probabilities,
                        static_cast<std::size_t>(instance.gold), clamps);
  }
  return fwd;
}

void backward(const ModelState& model, const PreparedInstance& instance,
              const ForwardResult& fwd, ParamSet& grads) {
  const auto& cfg = model.config;
  const std::size_t d = cfg.state_dim;
  const std::size_t dw = cfg.word_dim;
  const std::size_t tokens = instance.token_ids.size();
  if (instance.gold < 0) return;  // nothing to differentiate

  // d loss / d logits = p - onehot(gold); the bias is constant.
  std::vector<double> d_logits = fwd.probabilities;
  d_logits[static_cast<std::size_t>(instance.gold)] -= 1.0;

  std::vector<double> d_z;
  mlp_backward(model.params.classifier, fwd.classifier_cache, d_logits,
               grads_of(grads.classifier), &d_z);

  // feature z_n = h^n_head * h^n_tail (elementwise), layers 1..K
  std::vector<std::vector<std::vector<double>>> d_states(
      cfg.layers + 1,
      {std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)});
  for (std::size_t n = 1; n <= cfg.layers; ++n) {
    const auto& hs = fwd.states[n][0];
    const auto& ho = fwd.states[n][1];
    const double* dz = d_z.data() + (n - 1) * d;
    for (std::size_t i = 0; i < d; ++i) {
      d_states[n][0][i] += dz[i] * ho[i];
      d_states[n][1][i] += dz[i] * hs[i];
    }
  }

  std::vector<double> d_pooled_fwd(fwd.pooled_forward.size(), 0.0);
  std::vector<double> d_pooled_rev(fwd.pooled_reverse.size(), 0.0);

  for (std::size_t n = cfg.layers; n > 0; --n) {
    const auto& pre_h = fwd.pre_head[n - 1];
    const auto& pre_t = fwd.pre_tail[n - 1];
    const auto& mh = fwd.trans_forward[n - 1].m;
    const auto& mt = fwd.trans_reverse[n - 1].m;
    const auto& h_tail = fwd.states[n - 1][1];
    const auto& h_head = fwd.states[n - 1][0];

    std::vector<double> g_h(d), g_t(d);
    for (std::size_t r = 0; r < d; ++r) {
      g_h[r] = pre_h[r] > 0.0 ? d_states[n][0][r] : 0.0;
      g_t[r] = pre_t[r] > 0.0 ? d_states[n][1][r] : 0.0;
    }

    std::vector<double> d_mh(d * d, 0.0), d_mt(d * d, 0.0);
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        d_mh[r * d + c] = g_h[r] * h_tail[c];
        d_mt[r * d + c] = g_t[r] * h_head[c];
        d_states[n - 1][1][c] += mh[r * d + c] * g_h[r];
        d_states[n - 1][0][c] += mt[r * d + c] * g_t[r];
      }
    }

    // M = SP + A: the same upstream gradient flows into both generators.
    std::vector<double> d_input;
    mlp_backward(model.params.sentence_generators[n - 1],
                 fwd.trans_forward[n - 1].a_cache, d_mh,
                 grads_of(grads.sentence_generators[n - 1]), &d_input);
    for (std::size_t i = 0; i < d_input.size(); ++i) d_pooled_fwd[i] += d_input[i];
    mlp_backward(model.params.symbolic_generators[n - 1],
                 fwd.trans_forward[n - 1].sp_cache, d_mh,
                 grads_of(grads.symbolic_generators[n - 1]), nullptr);

    mlp_backward(model.params.sentence_generators[n - 1],
                 fwd.trans_reverse[n - 1].a_cache, d_mt,
                 grads_of(grads.sentence_generators[n - 1]), &d_input);
    for (std::size_t i = 0; i < d_input.size(); ++i) d_pooled_rev[i] += d_input[i];
    mlp_backward(model.params.symbolic_generators[n - 1],
                 fwd.trans_reverse[n - 1].sp_cache, d_mt,
                 grads_of(grads.symbolic_generators[n - 1]), nullptr);
  }

  // pooled encodings are token means: route back into the tables
  const double inv_t = 1.0 / static_cast<double>(tokens);
  for (std::size_t t = 0; t < tokens; ++t) {
    if (instance.token_ids[t] >= 0) {
      double* row = grads.word_table.data.data() +
                    static_cast<std::size_t>(instance.token_ids[t]) * dw;
      for (std::size_t i = 0; i < dw; ++i)
        row[i] += (d_pooled_fwd[i] + d_pooled_rev[i]) * inv_t;
    }
    auto cat_f = position_category(t, instance.head_span, instance.tail_span);
    auto cat_r = position_category(t, instance.tail_span, instance.head_span);
    double* pf = grads.position_table.data.data() +
                 static_cast<std::size_t>(cat_f) * cfg.position_dim;
    double* pr = grads.position_table.data.data() +
                 static_cast<std::size_t>(cat_r) * cfg.position_dim;
    for (std::size_t i = 0; i < cfg.position_dim; ++i) {
      pf[i] += d_pooled_fwd[dw + i] * inv_t;
      pr[i] += d_pooled_rev[dw + i] * inv_t;
    }
  }

  check_finite(grads, "backward");
}

// ---------------------------------------------------------------------------
// Checkpoint io

namespace {

constexpr char kMagic[8] = {'O', 'N', 'T', 'O', 'R', 'E', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw DataError("truncated checkpoint");
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  auto len = read_pod<std::uint32_t>(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw DataError("truncated checkpoint");
  return s;
}

}  // namespace

void save_checkpoint(const ModelState& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);

  nlohmann::json header{
      {"state_dim", model.config.state_dim},
      {"layers", model.config.layers},
      {"hidden_width", model.config.hidden_width},
      {"word_dim", model.config.word_dim},
      {"position_dim", model.config.position_dim},
      {"encoding_dim", model.config.encoding_dim},
      {"relation_count", model.config.relation_count},
      {"dropout", model.config.dropout},
      {"relations", model.relation_labels},
      {"vocab", model.vocab},
  };
  write_string(out, header.dump());

  auto tensors = model.params.tensors();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    write_string(out, t->name);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t->dims.size()));
    for (auto dim : t->dims) write_pod<std::uint64_t>(out, dim);
    out.write(reinterpret_cast<const char*>(t->data.data()),
              static_cast<std::streamsize>(t->data.size() * sizeof(double)));
  }
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file: " + path.string());
  auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }

  ModelState m;
  try {
    m.config.state_dim = header.at("state_dim").get<std::size_t>();
    m.config.layers = header.at("layers").get<std::size_t>();
    m.config.hidden_width = header.at("hidden_width").get<std::size_t>();
    m.config.word_dim = header.at("word_dim").get<std::size_t>();
    m.config.position_dim = header.at("position_dim").get<std::size_t>();
    m.config.encoding_dim = header.at("encoding_dim").get<std::size_t>();
    m.config.relation_count = header.at("relation_count").get<std::size_t>();
    m.config.dropout = header.at("dropout").get<double>();
    m.relation_labels = header.at("relations").get<std::vector<std::string>>();
    m.vocab = header.at("vocab").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad checkpoint header: ") + e.what());
  }
  m.config.validate();
  if (m.relation_labels.size() != m.config.relation_count)
    throw DataError("checkpoint relation list does not match relation_count");
  for (std::uint32_t i = 0; i < m.vocab.size(); ++i)
    m.vocab_index.emplace(m.vocab[i], i);
  m.params = make_param_set(m.config, m.vocab.size());

  auto tensors = m.params.tensors();
  std::unordered_map<std::string, Tensor*> by_name;
  for (auto* t : tensors) by_name.emplace(t->name, t);

  auto count = read_pod<std::uint32_t>(in);
  if (count != tensors.size())
    throw DataError("checkpoint holds " + std::to_string(count) +
                    " tensors, expected " + std::to_string(tensors.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = read_string(in);
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw DataError("unexpected tensor in checkpoint: " + name);
    Tensor* t = it->second;
    auto ndims = read_pod<std::uint32_t>(in);
    std::vector<std::size_t> dims(ndims);
    for (auto& dim : dims)
      dim = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
    if (dims != t->dims)
      throw DataError("tensor '" + name + "' shape does not match config");
    in.read(reinterpret_cast<char*>(t->data.data()),
            static_cast<std::streamsize>(t->data.size() * sizeof(double)));
    if (!in) throw DataError("truncated checkpoint");
    by_name.erase(it);
  }
  if (!by_name.empty())
    throw DataError("checkpoint is missing tensor: " +
                    by_name.begin()->second->name);
  return m;
}

}  // namespace ontorel
