#include "eadl/attention/spec.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "eadl/error.hpp"

namespace eadl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::parameter,
          "attention spec: '" + std::string(key) + "' needs a non-negative integer, got '" + std::string(text) + "'");
  return v;
}

std::map<std::string, std::string, std::less<>> parse_fields(std::string_view body, std::string_view kind,
                                                              std::initializer_list<std::string_view> allowed) {
  std::map<std::string, std::string, std::less<>> fields;
  while (!body.empty()) {
    const auto comma = body.find(',');
    const auto item = body.substr(0, comma);
    body = comma == std::string_view::npos ? std::string_view{} : body.substr(comma + 1);
    const auto eq = item.find('=');
    require(eq != std::string_view::npos && eq > 0, ErrorKind::parameter,
            "attention spec: expected key=value in '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    require(std::find(allowed.begin(), allowed.end(), key) != allowed.end(), ErrorKind::parameter,
            "attention spec: unknown key '" + std::string(key) + "' for " + std::string(kind));
    require(fields.emplace(std::string(key), std::string(item.substr(eq + 1))).second, ErrorKind::parameter,
            "attention spec: duplicate key '" + std::string(key) + "'");
  }
  return fields;
}

template <class T>
void take(const std::map<std::string, std::string, std::less<>>& fields, std::string_view key, T& out) {
  if (auto it = fields.find(key); it != fields.end()) out = static_cast<T>(parse_uint(key, it->second));
}

bool is_prefix_set(const std::vector<std::size_t>& global) {
  for (std::size_t i = 0; i < global.size(); ++i)
    if (global[i] != i) return false;
  return true;
}

}  // namespace

void validate(const AttentionSpec& spec) {
  std::visit(overloaded{
                 [](const FullAttention&) {},
                 [](const SlidingWindow& s) {
                   require(s.dilation >= 1, ErrorKind::parameter, "sliding window dilation must be >= 1");
                 },
                 [](const BlockSparse& s) {
                   require(s.block >= 1, ErrorKind::parameter, "block size must be >= 1");
                 },
                 [](const Nystrom& s) {
                   require(s.landmarks >= 1, ErrorKind::parameter, "nystrom needs at least one landmark");
                   require(s.pinv_iters >= 1, ErrorKind::parameter, "nystrom needs at least one pinv iteration");
                 },
                 [](const LocalSparseGlobal& s) {
                   require(s.stride >= 2, ErrorKind::parameter, "lsg sparse stride must be >= 2");
                 },
             },
             spec);
}

AttentionSpec parse_attention_spec(std::string_view text) {
  const auto colon = text.find(':');
  const auto kind = text.substr(0, colon);
  const auto body = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  AttentionSpec spec;
  if (kind == "full") {
    parse_fields(body, kind, {});
    spec = FullAttention{};
  } else if (kind == "window") {
    auto f = parse_fields(body, kind, {"w", "d", "g", "gset"});
    SlidingWindow s;
    take(f, "w", s.window);
    take(f, "d", s.dilation);
    require(!(f.count("g") && f.count("gset")), ErrorKind::parameter, "window: give either g or gset, not both");
    if (auto it = f.find("g"); it != f.end()) {
      const auto count = parse_uint("g", it->second);
      for (std::size_t i = 0; i < count; ++i) s.global.push_back(i);
    }
    if (auto it = f.find("gset"); it != f.end()) {
      std::string_view rest = it->second;
      while (!rest.empty()) {
        const auto bar = rest.find('|');
        s.global.push_back(parse_uint("gset", rest.substr(0, bar)));
        rest = bar == std::string_view::npos ? std::string_view{} : rest.substr(bar + 1);
      }
      std::sort(s.global.begin(), s.global.end());
      s.global.erase(std::unique(s.global.begin(), s.global.end()), s.global.end());
    }
    spec = s;
  } else if (kind == "bigbird") {
    auto f = parse_fields(body, kind, {"b", "r", "g", "seed"});
    BlockSparse s;
    take(f, "b", s.block);
    take(f, "r", s.random_blocks);
    take(f, "g", s.global_blocks);
    take(f, "seed", s.seed);
    spec = s;
  } else if (kind == "nystrom") {
    auto f = parse_fields(body, kind, {"m", "it"});
    Nystrom s;
    take(f, "m", s.landmarks);
    take(f, "it", s.pinv_iters);
    spec = s;
  } else if (kind == "lsg") {
    auto f = parse_fields(body, kind, {"w", "s", "g"});
    LocalSparseGlobal s;
    take(f, "w", s.local);
    take(f, "s", s.stride);
    take(f, "g", s.global_blocks);
    spec = s;
  } else {
    fail(ErrorKind::parameter, "unknown attention pattern '" + std::string(kind) + "'");
  }
  validate(spec);
  return spec;
}

std::string to_string(const AttentionSpec& spec) {
  return std::visit(
      overloaded{
          [](const FullAttention&) { return std::string("full"); },
          [](const SlidingWindow& s) {
            std::string out = "window:w=" + std::to_string(s.window) + ",d=" + std::to_string(s.dilation);
            if (is_prefix_set(s.global)) return out + ",g=" + std::to_string(s.global.size());
            out += ",gset=";
            for (std::size_t i = 0; i < s.global.size(); ++i) out += (i ? "|" : "") + std::to_string(s.global[i]);
            return out;
          },
          [](const BlockSparse& s) {
            return "bigbird:b=" + std::to_string(s.block) + ",r=" + std::to_string(s.random_blocks) +
                   ",g=" + std::to_string(s.global_blocks) + ",seed=" + std::to_string(s.seed);
          },
          [](const Nystrom& s) {
            return "nystrom:m=" + std::to_string(s.landmarks) + ",it=" + std::to_string(s.pinv_iters);
          },
          [](const LocalSparseGlobal& s) {
            return "lsg:w=" + std::to_string(s.local) + ",s=" + std::to_string(s.stride) +
                   ",g=" + std::to_string(s.global_blocks);
          },
      },
      spec);
}

AttentionSpec spec_for_layer(const AttentionSpec& spec, std::size_t layer) {
  if (const auto* s = std::get_if<BlockSparse>(&spec)) {
    BlockSparse copy = *s;
    copy.seed ^= static_cast<std::uint64_t>(layer);
    return copy;
  }
  return spec;
}

AttentionSpec with_leading_global(const AttentionSpec& spec) {
  if (const auto* s = std::get_if<SlidingWindow>(&spec)) {
    SlidingWindow copy = *s;
    if (std::find(copy.global.begin(), copy.global.end(), 0) == copy.global.end())
      copy.global.insert(copy.global.begin(), 0);
    return copy;
  }
  if (const auto* s = std::get_if<BlockSparse>(&spec)) {
    BlockSparse copy = *s;
    copy.global_blocks = std::max<std::size_t>(copy.global_blocks, 1);
    return copy;
  }
  if (const auto* s = std::get_if<LocalSparseGlobal>(&spec)) {
    LocalSparseGlobal copy = *s;
    copy.global_blocks = std::max<std::size_t>(copy.global_blocks, 1);
    return copy;
  }
  return spec;
}

bool is_masked(const AttentionSpec& spec) { return !std::holds_alternative<Nystrom>(spec); }

}  // namespace eadl
