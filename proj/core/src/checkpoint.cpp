#include <fstream>

#include "drlir/actor_critic.hpp"
#include "drlir/error.hpp"
#include "drlir/io.hpp"

namespace drlir {
namespace {

constexpr std::string_view kCheckpointMagic = "DRLIRCKP";
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint32_t kFlagUsePe = 1u;

void write_shape(std::ostream& out, const MlpParams& net) {
  binary::write_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    binary::write_u32(out, static_cast<std::uint32_t>(l.weight.cols()));
    binary::write_u32(out, static_cast<std::uint32_t>(l.weight.rows()));
    out.put(static_cast<char>(l.activation));
  }
}

MlpParams read_shape(std::istream& in) {
  MlpParams net;
  const auto layers = binary::read_u32(in);
  if (layers == 0 || layers > 64) throw FormatError("implausible layer count");
  for (std::uint32_t i = 0; i < layers; ++i) {
    const auto cols = binary::read_u32(in);
    const auto rows = binary::read_u32(in);
    const int act = in.get();
    if (act < 0 || act > static_cast<int>(Activation::tanh)) throw FormatError("bad activation tag");
    DenseLayer layer;
    layer.weight.resize(rows, cols);
    layer.bias.resize(rows);
    layer.activation = static_cast<Activation>(act);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

// Weights row-major then biases, layer by layer.
void write_values(std::ostream& out, const MlpParams& net) {
  for (const auto& l : net.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) binary::write_f64(out, l.weight(r, c));
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) binary::write_f64(out, l.bias[r]);
  }
}

void read_values(std::istream& in, MlpParams& net) {
  for (auto& l : net.layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = binary::read_f64(in);
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = binary::read_f64(in);
  }
}

}  // namespace

void AgentNets::save(const std::filesystem::path& path) const {
  const MlpParams* nets[] = {&actor, &critic, &target_actor, &target_critic};
  write_atomically(path, [&](std::ostream& out) {
    binary::write_magic(out, kCheckpointMagic);
    binary::write_u32(out, kCheckpointVersion);
    binary::write_u64(out, step);
    binary::write_u32(out, use_pe ? kFlagUsePe : 0u);
    binary::write_u32(out, 4);
    for (const auto* net : nets) write_shape(out, *net);
    for (const auto* net : nets) write_values(out, *net);
  });
}

AgentNets AgentNets::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  binary::expect_magic(in, kCheckpointMagic);
  const auto version = binary::read_u32(in);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " not supported");
  }
  AgentNets nets;
  nets.step = binary::read_u64(in);
  nets.use_pe = (binary::read_u32(in) & kFlagUsePe) != 0;
  if (binary::read_u32(in) != 4) throw FormatError("checkpoint must hold four networks");
  MlpParams* slots[] = {&nets.actor, &nets.critic, &nets.target_actor, &nets.target_critic};
  for (auto* slot : slots) *slot = read_shape(in);
  for (auto* slot : slots) read_values(in, *slot);
  if (!nets.actor.same_shape(nets.target_actor) || !nets.critic.same_shape(nets.target_critic)) {
    throw FormatError("target network shapes differ from online networks");
  }
  return nets;
}

}  // namespace drlir
