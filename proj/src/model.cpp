#include "smrec/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "smrec/fnv.hpp"
#include "smrec/kernels.hpp"
#include "smrec/metrics.hpp"
#include "smrec/rng.hpp"

namespace smrec::model {

namespace {

constexpr char kMagic[5] = {'S', 'M', 'R', 'K', '1'};
constexpr double kProbClamp = 1e-7;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void init_table(EmbeddingTable& t, uint32_t rows, uint32_t dim, Rng& rng) {
  t.rows = rows;
  t.dim = dim;
  t.weights.resize(static_cast<size_t>(rows) * dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (double& w : t.weights) w = rng.uniform(-scale, scale);
}

void init_affine(Affine& a, uint32_t in, uint32_t out, Rng& rng) {
  a.in = in;
  a.out = out;
  a.weights.resize(static_cast<size_t>(in) * out);
  a.bias.assign(out, 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : a.weights) w = rng.uniform(-scale, scale);
}

Affine zeros_affine(const Affine& like) {
  Affine a;
  a.in = like.in;
  a.out = like.out;
  a.weights.assign(like.weights.size(), 0.0);
  a.bias.assign(like.bias.size(), 0.0);
  return a;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, uint64_t seed) {
  ModelParams p;
  p.config = config;
  p.init_seed = seed;
  // Each parameter block draws from its own seeded stream so that, e.g.,
  // resizing a token table cannot shift the trunk init; arms of one experiment
  // then share identical non-token initialization and deltas reflect features,
  // not initialization luck.
  auto stream = [seed](uint64_t block) { return Rng(seed ^ (0x9e3779b97f4a7c15ull * (block + 1))); };
  const uint32_t d = config.embedding_dim;
  Rng r0 = stream(0), r1 = stream(1);
  init_table(p.user_table, config.user_rows, d, r0);
  init_table(p.item_table, config.item_rows, d, r1);
  // Token tables start at zero: pooled token inputs then vanish at init, so a
  // treatment arm predicts exactly like the baseline until tokens learn
  // something, and null-signal arms stay quiet.
  auto zero_table = [d](EmbeddingTable& t, uint32_t rows) {
    t.rows = rows;
    t.dim = d;
    t.weights.assign(static_cast<size_t>(rows) * d, 0.0);
  };
  zero_table(p.token_table_item, config.item_token_rows);
  zero_table(p.token_table_profile, config.profile_token_rows);
  uint32_t in = config.input_dim();
  for (size_t l = 0; l < config.hidden.size(); ++l) {
    Affine layer;
    Rng rl = stream(4 + l);
    init_affine(layer, in, config.hidden[l], rl);
    p.trunk.push_back(std::move(layer));
    in = config.hidden[l];
  }
  for (size_t h = 0; h < p.heads.size(); ++h) {
    Rng rh = stream(100 + h);
    init_affine(p.heads[h], in, 1, rh);
  }
  return p;
}

size_t ModelParams::num_params() const {
  size_t n = user_table.weights.size() + item_table.weights.size() +
             token_table_item.weights.size() + token_table_profile.weights.size();
  for (const auto& l : trunk) n += l.weights.size() + l.bias.size();
  for (const auto& h : heads) n += h.weights.size() + h.bias.size();
  return n;
}

std::vector<double*> ModelParams::param_ptrs() {
  std::vector<double*> out;
  out.reserve(num_params());
  auto push_all = [&out](std::vector<double>& v) {
    for (double& x : v) out.push_back(&x);
  };
  push_all(user_table.weights);
  push_all(item_table.weights);
  push_all(token_table_item.weights);
  push_all(token_table_profile.weights);
  for (auto& l : trunk) {
    push_all(l.weights);
    push_all(l.bias);
  }
  for (auto& h : heads) {
    push_all(h.weights);
    push_all(h.bias);
  }
  return out;
}

std::vector<double> pool(const tok::TokenIdList& tokens, const EmbeddingTable& table) {
  std::vector<double> out(table.dim, 0.0);
  if (tokens.empty()) return out;
  for (uint32_t id : tokens) {
    if (id >= table.rows) throw IdOutOfRange(id, table.rows);
    kern::axpy(1.0, table.row(id), out.data(), table.dim);
  }
  kern::scale(1.0 / static_cast<double>(tokens.size()), out.data(), out.size());
  return out;
}

namespace {

// Writes the concatenated trunk input. Layout:
// [user d][item d][visual V][pooled item tokens d][pooled profile tokens d]
void build_input(const feat::FeatureBundle& bundle, const ModelParams& params,
                 std::vector<double>& input) {
  const ModelConfig& cfg = params.config;
  const uint32_t d = cfg.embedding_dim;
  input.assign(cfg.input_dim(), 0.0);
  double* p = input.data();

  if (bundle.user_idx >= cfg.user_rows) throw IdOutOfRange(bundle.user_idx, cfg.user_rows);
  if (bundle.item_idx >= cfg.item_rows) throw IdOutOfRange(bundle.item_idx, cfg.item_rows);
  std::memcpy(p, params.user_table.row(bundle.user_idx), d * sizeof(double));
  std::memcpy(p + d, params.item_table.row(bundle.item_idx), d * sizeof(double));

  if (cfg.groups.visual) {
    if (bundle.visual.size() != cfg.visual_dim)
      throw std::invalid_argument("visual vector length mismatch");
    std::memcpy(p + 2 * d, bundle.visual.data(), cfg.visual_dim * sizeof(double));
  }
  double* item_slot = p + 2 * d + cfg.visual_dim;
  if (cfg.groups.item_tokens && !bundle.item_tokens.empty()) {
    auto pooled = pool(bundle.item_tokens, params.token_table_item);
    std::memcpy(item_slot, pooled.data(), d * sizeof(double));
  }
  double* prof_slot = item_slot + d;
  if (cfg.groups.profile_tokens) {
    for (const auto& tokens : bundle.profile_tokens) {
      if (tokens.empty()) continue;
      auto pooled = pool(tokens, params.token_table_profile);
      kern::axpy(1.0 / static_cast<double>(prof::kNumEventTypes), pooled.data(), prof_slot, d);
    }
  }
}

}  // namespace

std::array<double, feat::kNumTasks> forward(const feat::FeatureBundle& bundle,
                                            const ModelParams& params, Workspace& ws) {
  build_input(bundle, params, ws.input);
  ws.pre.resize(params.trunk.size());
  ws.act.resize(params.trunk.size());

  const std::vector<double>* prev = &ws.input;
  for (size_t l = 0; l < params.trunk.size(); ++l) {
    const Affine& layer = params.trunk[l];
    ws.pre[l].resize(layer.out);
    ws.act[l].resize(layer.out);
    for (uint32_t i = 0; i < layer.out; ++i) {
      const double z =
          kern::dot(layer.weights.data() + static_cast<size_t>(i) * layer.in, prev->data(),
                    layer.in) +
          layer.bias[i];
      ws.pre[l][i] = z;
      ws.act[l][i] = z > 0.0 ? z : 0.0;
    }
    prev = &ws.act[l];
  }

  for (size_t k = 0; k < feat::kNumTasks; ++k) {
    const Affine& head = params.heads[k];
    ws.logits[k] = kern::dot(head.weights.data(), prev->data(), head.in) + head.bias[0];
    ws.probs[k] = sigmoid(ws.logits[k]);
    if (!std::isfinite(ws.probs[k])) throw NonFiniteActivation();
  }
  return ws.probs;
}

double loss(const std::array<double, feat::kNumTasks>& probs,
            const std::array<uint8_t, feat::kNumTasks>& labels) {
  double total = 0.0;
  for (size_t k = 0; k < feat::kNumTasks; ++k) {
    const double p = std::clamp(probs[k], kProbClamp, 1.0 - kProbClamp);
    total -= labels[k] ? std::log(p) : std::log(1.0 - p);
  }
  return total;
}

Gradients Gradients::zeros_like(const ModelParams& params) {
  Gradients g;
  for (const auto& l : params.trunk) g.trunk.push_back(zeros_affine(l));
  for (size_t k = 0; k < feat::kNumTasks; ++k) g.heads[k] = zeros_affine(params.heads[k]);
  return g;
}

void Gradients::reset() {
  for (auto& l : trunk) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  for (auto& h : heads) {
    std::fill(h.weights.begin(), h.weights.end(), 0.0);
    std::fill(h.bias.begin(), h.bias.end(), 0.0);
  }
  user_rows.clear();
  item_rows.clear();
  token_item_rows.clear();
  token_profile_rows.clear();
  count = 0;
}

namespace {

void scatter_row_grad(std::map<uint32_t, std::vector<double>>& rows, uint32_t id,
                      const double* grad, double scale, uint32_t dim) {
  auto [it, inserted] = rows.try_emplace(id);
  if (inserted) it->second.assign(dim, 0.0);
  kern::axpy(scale, grad, it->second.data(), dim);
}

}  // namespace

void backward(const feat::FeatureBundle& bundle, const ModelParams& params, const Workspace& ws,
              Gradients& grads) {
  const ModelConfig& cfg = params.config;
  const uint32_t d = cfg.embedding_dim;
  const size_t L = params.trunk.size();

  // heads
  const std::vector<double>& last_act = L > 0 ? ws.act[L - 1] : ws.input;
  std::vector<double> dact(last_act.size(), 0.0);
  for (size_t k = 0; k < feat::kNumTasks; ++k) {
    const double dlogit = ws.probs[k] - static_cast<double>(bundle.labels[k]);
    Affine& hg = grads.heads[k];
    kern::axpy(dlogit, last_act.data(), hg.weights.data(), hg.in);
    hg.bias[0] += dlogit;
    kern::axpy(dlogit, params.heads[k].weights.data(), dact.data(), hg.in);
  }

  // trunk, back to front
  std::vector<double> dprev;
  for (size_t l = L; l-- > 0;) {
    const Affine& layer = params.trunk[l];
    Affine& lg = grads.trunk[l];
    const std::vector<double>& prev_act = l > 0 ? ws.act[l - 1] : ws.input;
    dprev.assign(prev_act.size(), 0.0);
    for (uint32_t i = 0; i < layer.out; ++i) {
      if (ws.pre[l][i] <= 0.0) continue;  // ReLU gate
      const double dpre = dact[i];
      if (dpre == 0.0) continue;
      kern::axpy(dpre, prev_act.data(), lg.weights.data() + static_cast<size_t>(i) * layer.in,
                 layer.in);
      lg.bias[i] += dpre;
      kern::axpy(dpre, layer.weights.data() + static_cast<size_t>(i) * layer.in, dprev.data(),
                 layer.in);
    }
    dact.swap(dprev);
  }

  // embedding tables from the input gradient
  const double* dinput = dact.data();
  scatter_row_grad(grads.user_rows, bundle.user_idx, dinput, 1.0, d);
  scatter_row_grad(grads.item_rows, bundle.item_idx, dinput + d, 1.0, d);
  const double* d_item_slot = dinput + 2 * d + cfg.visual_dim;
  if (cfg.groups.item_tokens && !bundle.item_tokens.empty()) {
    const double inv = 1.0 / static_cast<double>(bundle.item_tokens.size());
    for (uint32_t id : bundle.item_tokens)
      scatter_row_grad(grads.token_item_rows, id, d_item_slot, inv, d);
  }
  const double* d_prof_slot = d_item_slot + d;
  if (cfg.groups.profile_tokens) {
    for (const auto& tokens : bundle.profile_tokens) {
      if (tokens.empty()) continue;
      const double inv =
          1.0 / (static_cast<double>(prof::kNumEventTypes) * static_cast<double>(tokens.size()));
      for (uint32_t id : tokens) scatter_row_grad(grads.token_profile_rows, id, d_prof_slot, inv, d);
    }
  }
  ++grads.count;
}

namespace {

struct AdagradState {
  std::vector<double> user, item, token_item, token_profile;
  std::vector<std::vector<double>> trunk_w, trunk_b;
  std::array<std::vector<double>, feat::kNumTasks> head_w, head_b;

  explicit AdagradState(const ModelParams& p)
      : user(p.user_table.weights.size(), 0.0),
        item(p.item_table.weights.size(), 0.0),
        token_item(p.token_table_item.weights.size(), 0.0),
        token_profile(p.token_table_profile.weights.size(), 0.0) {
    for (const auto& l : p.trunk) {
      trunk_w.emplace_back(l.weights.size(), 0.0);
      trunk_b.emplace_back(l.bias.size(), 0.0);
    }
    for (size_t k = 0; k < feat::kNumTasks; ++k) {
      head_w[k].assign(p.heads[k].weights.size(), 0.0);
      head_b[k].assign(p.heads[k].bias.size(), 0.0);
    }
  }
};

void apply_sparse(EmbeddingTable& table, std::vector<double>& acc,
                  std::map<uint32_t, std::vector<double>>& rows, double scale, double lr,
                  double eps) {
  for (auto& [id, grad] : rows) {
    kern::scale(scale, grad.data(), grad.size());
    kern::adagrad(table.row(id), acc.data() + static_cast<size_t>(id) * table.dim, grad.data(),
                  table.dim, lr, eps);
  }
}

}  // namespace

ModelParams train(const feat::DatasetSplit& split, const ModelConfig& model_config,
                  const TrainConfig& train_config, TrainLog* log) {
  if (split.train.empty()) throw std::invalid_argument("train: empty training set");
  ModelParams params = ModelParams::init(model_config, train_config.seed);
  AdagradState acc(params);
  Gradients grads = Gradients::zeros_like(params);
  Workspace ws;
  Rng shuffle_rng(train_config.seed ^ 0x5eedc0de12345678ull);

  std::vector<uint32_t> order = identity_permutation(split.train.size());
  const double lr = train_config.lr;
  const double eps = train_config.adagrad_eps;

  if (log) log->epochs.clear();
  size_t examples_seen = 0;
  const auto t_start = std::chrono::steady_clock::now();

  for (uint32_t epoch = 0; epoch < train_config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t i = 0;
    while (i < order.size()) {
      const size_t batch_end = std::min(i + train_config.batch_size, order.size());
      const double inv_batch = 1.0 / static_cast<double>(batch_end - i);
      grads.reset();
      for (; i < batch_end; ++i) {
        const feat::FeatureBundle& b = split.train[order[i]];
        forward(b, params, ws);
        const double l = loss(ws.probs, b.labels);
        if (!std::isfinite(l)) throw Diverged();
        epoch_loss += l;
        backward(b, params, ws, grads);
      }
      // dense updates
      for (size_t l = 0; l < params.trunk.size(); ++l) {
        kern::scale(inv_batch, grads.trunk[l].weights.data(), grads.trunk[l].weights.size());
        kern::scale(inv_batch, grads.trunk[l].bias.data(), grads.trunk[l].bias.size());
        kern::adagrad(params.trunk[l].weights.data(), acc.trunk_w[l].data(),
                      grads.trunk[l].weights.data(), grads.trunk[l].weights.size(), lr, eps);
        kern::adagrad(params.trunk[l].bias.data(), acc.trunk_b[l].data(),
                      grads.trunk[l].bias.data(), grads.trunk[l].bias.size(), lr, eps);
      }
      for (size_t k = 0; k < feat::kNumTasks; ++k) {
        kern::scale(inv_batch, grads.heads[k].weights.data(), grads.heads[k].weights.size());
        kern::scale(inv_batch, grads.heads[k].bias.data(), grads.heads[k].bias.size());
        kern::adagrad(params.heads[k].weights.data(), acc.head_w[k].data(),
                      grads.heads[k].weights.data(), grads.heads[k].weights.size(), lr, eps);
        kern::adagrad(params.heads[k].bias.data(), acc.head_b[k].data(),
                      grads.heads[k].bias.data(), grads.heads[k].bias.size(), lr, eps);
      }
      // sparse updates, row order fixed by the map ordering
      apply_sparse(params.user_table, acc.user, grads.user_rows, inv_batch, lr, eps);
      apply_sparse(params.item_table, acc.item, grads.item_rows, inv_batch, lr, eps);
      apply_sparse(params.token_table_item, acc.token_item, grads.token_item_rows, inv_batch, lr,
                   eps);
      apply_sparse(params.token_table_profile, acc.token_profile, grads.token_profile_rows,
                   inv_batch, lr, eps);
      // Per-batch shrink of the token tables only. Noise-level token weights
      // decay away while strongly-driven ones are re-won every batch; keeps
      // null-signal arms indistinguishable from the baseline.
      if (train_config.token_weight_decay > 0.0) {
        const double shrink = 1.0 - train_config.token_weight_decay;
        kern::scale(shrink, params.token_table_item.weights.data(),
                    params.token_table_item.weights.size());
        kern::scale(shrink, params.token_table_profile.weights.data(),
                    params.token_table_profile.weights.size());
      }
    }
    examples_seen += order.size();

    if (log) {
      EpochStats stats;
      stats.train_loss = epoch_loss / static_cast<double>(order.size());
      if (!split.eval.empty()) {
        auto probs = predict(split.eval, params);
        for (size_t k = 0; k < feat::kNumTasks; ++k) {
          std::vector<uint8_t> labels(split.eval.size());
          std::vector<double> scores(split.eval.size());
          for (size_t e = 0; e < split.eval.size(); ++e) {
            labels[e] = split.eval[e].labels[k];
            scores[e] = probs[e][k];
          }
          try {
            stats.eval_auc[k] = metrics::auc(labels, scores);
            stats.eval_ne[k] = metrics::ne(labels, scores);
          } catch (const metrics::DegenerateLabels&) {
            stats.eval_auc[k] = std::nan("");
            stats.eval_ne[k] = std::nan("");
          }
        }
      }
      log->epochs.push_back(stats);
    }
  }

  if (log) {
    const auto t_end = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(t_end - t_start).count();
    log->seconds_per_example = examples_seen > 0 ? secs / static_cast<double>(examples_seen) : 0.0;
  }
  return params;
}

std::vector<std::array<double, feat::kNumTasks>> predict(const feat::Dataset& dataset,
                                                         const ModelParams& params) {
  std::vector<std::array<double, feat::kNumTasks>> out;
  out.reserve(dataset.size());
  Workspace ws;
  for (const auto& b : dataset) out.push_back(forward(b, params, ws));
  return out;
}

namespace {

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& buf, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(buf, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  bool ok(size_t n) const { return pos + n <= buf.size(); }
  uint32_t u32() {
    if (!ok(4)) throw CorruptChecksum();
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    if (!ok(8)) throw CorruptChecksum();
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
};

nlohmann::json config_to_json(const ModelParams& p) {
  return nlohmann::json{
      {"embedding_dim", p.config.embedding_dim},
      {"visual_dim", p.config.visual_dim},
      {"hidden", p.config.hidden},
      {"user_rows", p.config.user_rows},
      {"item_rows", p.config.item_rows},
      {"item_token_rows", p.config.item_token_rows},
      {"profile_token_rows", p.config.profile_token_rows},
      {"seed", p.init_seed},
      {"groups",
       {{"visual", p.config.groups.visual},
        {"item_tokens", p.config.groups.item_tokens},
        {"profile_tokens", p.config.groups.profile_tokens}}}};
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  const std::string manifest = config_to_json(params).dump();
  put_u32(buf, static_cast<uint32_t>(manifest.size()));
  buf += manifest;
  put_u64(buf, params.num_params());

  auto dump_vec = [&buf](const std::vector<double>& v) {
    for (double d : v) put_f64(buf, d);
  };
  dump_vec(params.user_table.weights);
  dump_vec(params.item_table.weights);
  dump_vec(params.token_table_item.weights);
  dump_vec(params.token_table_profile.weights);
  for (const auto& l : params.trunk) {
    dump_vec(l.weights);
    dump_vec(l.bias);
  }
  for (const auto& h : params.heads) {
    dump_vec(h.weights);
    dump_vec(h.bias);
  }
  put_u64(buf, fnv1a64(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw VersionMismatch();
  if (buf.size() < sizeof(kMagic) + 8) throw CorruptChecksum();

  Reader r{buf, 0};
  r.pos = buf.size() - 8;
  const uint64_t stored = r.u64();
  if (fnv1a64(buf.data(), buf.size() - 8) != stored) throw CorruptChecksum();

  r.pos = sizeof(kMagic);
  const uint32_t manifest_len = r.u32();
  if (!r.ok(manifest_len)) throw CorruptChecksum();
  nlohmann::json manifest =
      nlohmann::json::parse(buf.substr(r.pos, manifest_len), nullptr, false);
  if (manifest.is_discarded()) throw VersionMismatch();
  r.pos += manifest_len;

  ModelConfig cfg;
  cfg.embedding_dim = manifest.at("embedding_dim").get<uint32_t>();
  cfg.visual_dim = manifest.at("visual_dim").get<uint32_t>();
  cfg.hidden = manifest.at("hidden").get<std::vector<uint32_t>>();
  cfg.user_rows = manifest.at("user_rows").get<uint32_t>();
  cfg.item_rows = manifest.at("item_rows").get<uint32_t>();
  cfg.item_token_rows = manifest.at("item_token_rows").get<uint32_t>();
  cfg.profile_token_rows = manifest.at("profile_token_rows").get<uint32_t>();
  const auto& g = manifest.at("groups");
  cfg.groups.visual = g.at("visual").get<bool>();
  cfg.groups.item_tokens = g.at("item_tokens").get<bool>();
  cfg.groups.profile_tokens = g.at("profile_tokens").get<bool>();

  ModelParams p = ModelParams::init(cfg, manifest.at("seed").get<uint64_t>());
  const uint64_t declared = r.u64();
  if (declared != p.num_params()) throw VersionMismatch();

  auto read_vec = [&r](std::vector<double>& v) {
    for (double& d : v) d = r.f64();
  };
  read_vec(p.user_table.weights);
  read_vec(p.item_table.weights);
  read_vec(p.token_table_item.weights);
  read_vec(p.token_table_profile.weights);
  for (auto& l : p.trunk) {
    read_vec(l.weights);
    read_vec(l.bias);
  }
  for (auto& h : p.heads) {
    read_vec(h.weights);
    read_vec(h.bias);
  }
  return p;
}

}  // namespace smrec::model
