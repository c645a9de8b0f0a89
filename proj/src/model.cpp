#include "simstc/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include <json.hpp>

#include "simstc/error.hpp"
#include "simstc/io.hpp"
#include "simstc/random.hpp"

namespace simstc {
namespace {

constexpr std::string_view kCheckpointMagic = "SIMSTC-CHECKPOINT 1";

Matrix glorot(std::size_t rows, std::size_t cols, std::uint64_t seed, std::uint64_t stream) {
  Matrix m(rows, cols);
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  auto rng = make_stream(seed, stream);
  for (double& v : m.data) v = uniform(rng, -a, a);
  return m;
}

std::vector<Tensor*> mutable_tensors(ModelParams& m) {
  std::vector<Tensor*> out;
  for (auto& e : m.encoders) {
    out.push_back(&e.w0);
    out.push_back(&e.w1);
  }
  for (auto& h : m.heads) {
    out.push_back(&h.w_in);
    out.push_back(&h.b_in);
    out.push_back(&h.w_out);
    out.push_back(&h.b_out);
  }
  out.push_back(&m.classifier);
  return out;
}

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  return std::bit_cast<double>(bits);
}

// Skeleton with shapes only; values filled by the caller.
ModelParams allocate(const ModelConfig& config, const std::array<std::size_t, 3>& feature_dims,
                     std::size_t num_classes) {
  const std::size_t h = config.hidden_dim;
  const std::size_t q = config.proj_dim;
  ModelParams m;
  m.config = config;
  for (std::size_t v = 0; v < 3; ++v) {
    m.encoders[v].w0 = Tensor::parameter(Matrix(feature_dims[v], h));
    m.encoders[v].w1 = Tensor::parameter(Matrix(h, h));
  }
  const std::size_t n_heads = config.per_view_projection ? 3 : 1;
  for (std::size_t i = 0; i < n_heads; ++i) {
    m.heads.push_back({Tensor::parameter(Matrix(h, q)), Tensor::parameter(Matrix(1, q)),
                       Tensor::parameter(Matrix(q, q)), Tensor::parameter(Matrix(1, q))});
  }
  m.classifier = Tensor::parameter(Matrix(3 * h, num_classes));
  return m;
}

}  // namespace

std::string_view final_activation_name(FinalActivation a) {
  return a == FinalActivation::kRelu ? "relu" : "linear";
}

std::optional<FinalActivation> parse_final_activation(std::string_view name) {
  if (name == "linear") return FinalActivation::kLinear;
  if (name == "relu") return FinalActivation::kRelu;
  return std::nullopt;
}

std::vector<NamedParameter> ModelParams::parameters() const {
  std::vector<NamedParameter> out;
  for (std::size_t v = 0; v < 3; ++v) {
    const std::string prefix = "encoder." + std::string(view_name(static_cast<View>(v))) + ".";
    out.push_back({prefix + "w0", encoders[v].w0});
    out.push_back({prefix + "w1", encoders[v].w1});
  }
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const std::string prefix =
        heads.size() == 1 ? std::string("projection.")
                          : "projection." + std::string(view_name(static_cast<View>(i))) + ".";
    out.push_back({prefix + "w_in", heads[i].w_in});
    out.push_back({prefix + "b_in", heads[i].b_in});
    out.push_back({prefix + "w_out", heads[i].w_out});
    out.push_back({prefix + "b_out", heads[i].b_out});
  }
  out.push_back({"classifier.w", classifier});
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.value().size();
  return n;
}

ModelParams ModelParams::clone() const {
  ModelParams copy = *this;
  for (Tensor* t : mutable_tensors(copy)) *t = Tensor::parameter(t->value());
  return copy;
}

void ModelParams::zero_grad() {
  for (Tensor* t : mutable_tensors(*this)) t->zero_grad();
}

ModelParams init_model(const ModelConfig& config, const std::array<std::size_t, 3>& feature_dims,
                       std::size_t num_classes, std::uint64_t seed) {
  if (config.hidden_dim == 0 || config.proj_dim == 0) {
    throw Error("model.config", "hidden_dim and proj_dim must be positive");
  }
  if (num_classes == 0) throw Error("model.config", "need at least one class");
  ModelParams m = allocate(config, feature_dims, num_classes);
  const auto named = m.parameters();
  auto tensors = mutable_tensors(m);
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const auto& shape = tensors[k]->value();
    const bool is_bias = named[k].name.ends_with("b_in") || named[k].name.ends_with("b_out");
    if (is_bias) continue;
    tensors[k]->mutable_value() = glorot(shape.rows, shape.cols, seed, k);
  }
  return m;
}

ModelParams init_model(const ModelConfig& config, const GraphBundle& bundle, std::uint64_t seed) {
  return init_model(config,
                    {bundle.graphs[0].features.cols, bundle.graphs[1].features.cols,
                     bundle.graphs[2].features.cols},
                    bundle.num_classes(), seed);
}

Tensor encode_view(const ViewGraph& graph, const GcnEncoder& encoder,
                   FinalActivation final_activation) {
  if (graph.features.cols != encoder.w0.rows()) {
    throw Error("tensor.shape", "encode_view: feature dim " + std::to_string(graph.features.cols) +
                                    " vs W0 rows " + std::to_string(encoder.w0.rows()));
  }
  Tensor h1 = relu(matmul_sparse(graph.norm_adj, matmul_constant(graph.features, encoder.w0)));
  Tensor h2 = matmul_sparse(graph.norm_adj, matmul(h1, encoder.w1));
  return final_activation == FinalActivation::kRelu ? relu(h2) : h2;
}

Tensor aggregate_texts(const SparseMatrix& links, const Tensor& node_embeddings) {
  return matmul_sparse(links, node_embeddings);
}

Tensor project(const Tensor& z, const ProjectionHead& head, std::size_t* guarded_rows) {
  Tensor hidden = relu(add_row_bias(matmul(z, head.w_in), head.b_in));
  Tensor out = add_row_bias(matmul(hidden, head.w_out), head.b_out);
  return row_normalize_l2(out, kNormEpsilon, guarded_rows);
}

Tensor classify(const Tensor& z_word, const Tensor& z_tag, const Tensor& z_entity,
                const Tensor& classifier) {
  return log_softmax_rows(matmul(concat_cols({z_word, z_tag, z_entity}), classifier));
}

ForwardPass forward(const ModelParams& model, const GraphBundle& bundle, bool with_projections) {
  ForwardPass out;
  for (View v : kAllViews) {
    const auto i = static_cast<std::size_t>(v);
    Tensor h = encode_view(bundle.graph(v), model.encoders[i], model.config.gcn_final_activation);
    out.z[i] = aggregate_texts(bundle.link(v), h);
    if (with_projections) {
      std::size_t guarded = 0;
      out.p[i] = project(out.z[i], model.head(v), &guarded);
      out.guarded_rows += guarded;
    }
  }
  out.log_probs = classify(out.z[0], out.z[1], out.z[2], model.classifier);
  return out;
}

std::vector<std::uint32_t> predict(const Matrix& log_probs) {
  std::vector<std::uint32_t> out(log_probs.rows, 0);
  for (std::size_t r = 0; r < log_probs.rows; ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < log_probs.cols; ++c) {
      if (log_probs(r, c) > log_probs(r, best)) best = c;
    }
    out[r] = static_cast<std::uint32_t>(best);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& model,
                     const CheckpointMeta& meta) {
  nlohmann::json header;
  header["hidden_dim"] = model.config.hidden_dim;
  header["proj_dim"] = model.config.proj_dim;
  header["gcn_final_activation"] = final_activation_name(model.config.gcn_final_activation);
  header["per_view_projection"] = model.config.per_view_projection;
  header["seed"] = meta.seed;
  header["bundle_hash"] = meta.bundle_hash;
  header["config_hash"] = meta.config_hash;
  header["extra"] = nlohmann::json::parse(meta.extra_json);
  auto& params = header["parameters"] = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    params.push_back({{"name", p.name}, {"rows", p.tensor.rows()}, {"cols", p.tensor.cols()}});
  }
  std::string bytes(kCheckpointMagic);
  bytes += '\n';
  bytes += header.dump();
  bytes += '\n';
  for (const auto& p : model.parameters()) {
    for (double v : p.tensor.value().data) put_le(bytes, v);
  }
  write_file_atomic(path, bytes);
}

ModelParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  const std::string bytes = read_file(path);
  const auto first = bytes.find('\n');
  if (first == std::string::npos || std::string_view(bytes).substr(0, first) != kCheckpointMagic) {
    throw Error("checkpoint.format", path.string() + ": not a checkpoint file");
  }
  const auto second = bytes.find('\n', first + 1);
  if (second == std::string::npos) throw Error("checkpoint.format", path.string() + ": no header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(first + 1, second - first - 1));
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint.format", path.string() + ": bad header: " + e.what());
  }
  ModelConfig config;
  config.hidden_dim = header.at("hidden_dim").get<std::size_t>();
  config.proj_dim = header.at("proj_dim").get<std::size_t>();
  config.gcn_final_activation =
      parse_final_activation(header.at("gcn_final_activation").get<std::string>())
          .value_or(FinalActivation::kLinear);
  config.per_view_projection = header.at("per_view_projection").get<bool>();
  const auto& params = header.at("parameters");
  if (params.size() < 2) throw Error("checkpoint.format", "too few parameters");
  const std::array<std::size_t, 3> dims{params[0].at("rows").get<std::size_t>(),
                                        params[2].at("rows").get<std::size_t>(),
                                        params[4].at("rows").get<std::size_t>()};
  const std::size_t classes = params.back().at("cols").get<std::size_t>();
  ModelParams model = allocate(config, dims, classes);
  auto tensors = mutable_tensors(model);
  const auto names = model.parameters();
  if (tensors.size() != params.size()) {
    throw Error("checkpoint.format", "parameter count mismatch");
  }
  std::size_t offset = second + 1;
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    Matrix& m = tensors[k]->mutable_value();
    if (params[k].at("name").get<std::string>() != names[k].name ||
        params[k].at("rows").get<std::size_t>() != m.rows ||
        params[k].at("cols").get<std::size_t>() != m.cols) {
      throw Error("checkpoint.format", "parameter " + names[k].name + " does not match header");
    }
    if (offset + m.size() * 8 > bytes.size()) {
      throw Error("checkpoint.format", path.string() + ": truncated");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
    for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = get_le(p + 8 * i);
    offset += m.size() * 8;
  }
  if (offset != bytes.size()) throw Error("checkpoint.format", path.string() + ": trailing bytes");
  if (meta != nullptr) {
    meta->seed = header.at("seed").get<std::uint64_t>();
    meta->bundle_hash = header.at("bundle_hash").get<std::string>();
    meta->config_hash = header.at("config_hash").get<std::string>();
    meta->extra_json = header.at("extra").dump();
  }
  return model;
}

}  // namespace simstc
