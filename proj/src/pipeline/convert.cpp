#include "eadl/pipeline/convert.hpp"

#include <algorithm>

#include "eadl/error.hpp"

namespace eadl {

PositionInit parse_position_init(std::string_view text) {
  if (text == "cyclic") return PositionInit::cyclic_copy;
  if (text == "random") return PositionInit::random_init;
  fail(ErrorKind::parameter, "position init must be 'cyclic' or 'random', got '" + std::string(text) + "'");
}

const char* to_string(PositionInit p) noexcept { return p == PositionInit::cyclic_copy ? "cyclic" : "random"; }

namespace {

Tensor extend_positions(const Tensor& old, std::size_t new_max, PositionInit init, std::uint64_t seed) {
  const std::size_t old_max = old.dim(0), h = old.dim(1);
  if (new_max == old_max) return old.clone();
  Tensor out = Tensor::zeros({new_max, h});
  auto src = old.data();
  auto dst = out.data();
  std::copy(src.begin(), src.end(), dst.begin());
  Rng rng(seed);
  for (std::size_t i = old_max; i < new_max; ++i)
    for (std::size_t c = 0; c < h; ++c)
      dst[i * h + c] = init == PositionInit::cyclic_copy ? src[(i % old_max) * h + c]
                                                         : static_cast<real>(0.02 * rng.normal());
  return out;
}

Checkpoint grow(const Checkpoint& ckpt, const AttentionSpec& spec, std::size_t new_max, PositionInit init,
                std::uint64_t seed) {
  const std::size_t old_max = ckpt.config.max_positions;
  require(new_max >= old_max, ErrorKind::unsupported,
          "cannot shrink max_positions from " + std::to_string(old_max) + " to " + std::to_string(new_max));
  if (const auto* ny = std::get_if<Nystrom>(&spec))
    require(ny->landmarks <= new_max, ErrorKind::parameter,
            "nystrom landmarks " + std::to_string(ny->landmarks) + " exceed max_positions " + std::to_string(new_max));
  if (const auto* sw = std::get_if<SlidingWindow>(&spec))
    for (auto g : sw->global)
      require(g < new_max, ErrorKind::parameter, "global token " + std::to_string(g) + " is beyond max_positions");
  check_weights(ckpt.config, ckpt.weights);

  Checkpoint out = clone_checkpoint(ckpt);
  out.config.attention_spec = spec;
  out.config.max_positions = new_max;
  validate(out.config);
  out.weights.position_embeddings = extend_positions(ckpt.weights.position_embeddings, new_max, init, seed);
  return out;
}

}  // namespace

Checkpoint convert(const Checkpoint& ckpt, const ConvertPlan& plan) {
  validate(plan.target_spec);
  return grow(ckpt, with_leading_global(plan.target_spec), plan.new_max_positions, plan.position_extension,
              plan.seed);
}

Checkpoint extend_only(const Checkpoint& ckpt, std::size_t new_max_positions, PositionInit init, std::uint64_t seed) {
  return grow(ckpt, ckpt.config.attention_spec, new_max_positions, init, seed);
}

}  // namespace eadl
