#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "simstc/graphs.hpp"
#include "simstc/tensor.hpp"

namespace simstc {

enum class FinalActivation { kLinear, kRelu };
std::string_view final_activation_name(FinalActivation a);
std::optional<FinalActivation> parse_final_activation(std::string_view name);

struct ModelConfig {
  std::size_t hidden_dim = 128;
  std::size_t proj_dim = 128;
  FinalActivation gcn_final_activation = FinalActivation::kLinear;
  bool per_view_projection = false;
};

// Two-layer GCN; no biases.
struct GcnEncoder {
  Tensor w0;  // d x h
  Tensor w1;  // h x h
};

// relu(z W_in + b_in) W_out + b_out
struct ProjectionHead {
  Tensor w_in;
  Tensor b_in;
  Tensor w_out;
  Tensor b_out;
};

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

struct ModelParams {
  ModelConfig config;
  std::array<GcnEncoder, 3> encoders;  // indexed by View
  std::vector<ProjectionHead> heads;   // one shared, or one per view
  Tensor classifier;                   // 3h x c

  const ProjectionHead& head(View v) const {
    return heads.size() == 1 ? heads[0] : heads[static_cast<std::size_t>(v)];
  }

  // Fixed order; optimizer state and checkpoints are aligned to it.
  std::vector<NamedParameter> parameters() const;
  std::size_t parameter_count() const;

  // Deep copy with fresh leaf tensors.
  ModelParams clone() const;
  void zero_grad();
};

// Weights are uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)), each tensor
// drawn from stream k of `seed` where k is its position in parameters().
// Biases start at zero.
ModelParams init_model(const ModelConfig& config, const std::array<std::size_t, 3>& feature_dims,
                       std::size_t num_classes, std::uint64_t seed);
ModelParams init_model(const ModelConfig& config, const GraphBundle& bundle, std::uint64_t seed);

// norm_adj * act(norm_adj * X * W0) * W1 with act = relu; the second layer is
// linear unless the config asks for a final relu.
Tensor encode_view(const ViewGraph& graph, const GcnEncoder& encoder,
                   FinalActivation final_activation = FinalActivation::kLinear);
// T * H
Tensor aggregate_texts(const SparseMatrix& links, const Tensor& node_embeddings);

inline constexpr double kNormEpsilon = 1e-12;
// Rows of the result are unit length except where the pre-normalization row
// was shorter than kNormEpsilon; those are counted into `guarded_rows`.
Tensor project(const Tensor& z, const ProjectionHead& head, std::size_t* guarded_rows = nullptr);
// log_softmax((Z_w || Z_p || Z_e) W)
Tensor classify(const Tensor& z_word, const Tensor& z_tag, const Tensor& z_entity,
                const Tensor& classifier);

struct ForwardPass {
  std::array<Tensor, 3> z;  // N x h per view
  std::array<Tensor, 3> p;  // N x proj_dim per view, empty unless requested
  Tensor log_probs;         // N x c
  std::size_t guarded_rows = 0;
};

ForwardPass forward(const ModelParams& model, const GraphBundle& bundle, bool with_projections = true);

// Argmax per row; ties go to the lowest class index.
std::vector<std::uint32_t> predict(const Matrix& log_probs);

// Binary checkpoint: a magic line, one JSON header line (config, seed,
// bundle hash, parameter names and shapes, extra metadata), then each
// parameter's values as little-endian IEEE-754 doubles in parameters() order.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string bundle_hash;
  std::string config_hash;
  std::string extra_json = "{}";  // free-form, round-tripped verbatim
};
void save_checkpoint(const std::filesystem::path& path, const ModelParams& model,
                     const CheckpointMeta& meta);
ModelParams load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace simstc
