#include "eadl/encoder/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json.hpp"

namespace eadl {

using nlohmann::json;

const char* to_string(FormatCode code) noexcept {
  switch (code) {
    case FormatCode::bad_magic: return "bad magic";
    case FormatCode::bad_version: return "unsupported version";
    case FormatCode::bad_metadata: return "bad metadata";
    case FormatCode::manifest_mismatch: return "manifest mismatch";
    case FormatCode::truncated: return "truncated payload";
    case FormatCode::trailing_bytes: return "trailing bytes";
    case FormatCode::io: return "i/o failure";
  }
  return "format";
}

namespace {

constexpr char kMagic[4] = {'E', 'A', 'D', 'L'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size},
              {"max_positions", c.max_positions},
              {"num_layers", c.num_layers},
              {"hidden_dim", c.hidden_dim},
              {"num_heads", c.num_heads},
              {"ffn_dim", c.ffn_dim},
              {"attention", to_string(c.attention_spec)},
              {"dropout_p", static_cast<double>(c.dropout_p)},
              {"tie_mlm_head", c.tie_mlm_head},
              {"num_tags", c.num_tags}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_positions = j.at("max_positions").get<std::size_t>();
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.num_heads = j.at("num_heads").get<std::size_t>();
  c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
  c.attention_spec = parse_attention_spec(j.at("attention").get<std::string>());
  c.dropout_p = static_cast<real>(j.at("dropout_p").get<double>());
  c.tie_mlm_head = j.at("tie_mlm_head").get<bool>();
  c.num_tags = j.at("num_tags").get<std::size_t>();
  validate(c);
  return c;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  check_weights(ckpt.config, ckpt.weights);
  const auto params = named_parameters(ckpt.weights);
  json manifest = json::array();
  for (const auto& [name, t] : params) manifest.push_back(json{{"name", name}, {"shape", t.shape()}});
  json meta{{"config", config_to_json(ckpt.config)}, {"manifest", manifest}};
  if (!ckpt.vocab.empty()) meta["vocab"] = ckpt.vocab;
  if (!ckpt.tag_labels.empty()) meta["tags"] = ckpt.tag_labels;
  const std::string text = meta.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, t] : params)
    for (real x : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
  return out;
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError(FormatCode::bad_magic, "file does not start with EADL");
  if (bytes.size() < 12) throw FormatError(FormatCode::truncated, "header shorter than 12 bytes");
  const std::uint32_t version = get_u32(bytes.data() + 4);
  if (version != kCheckpointVersion)
    throw FormatError(FormatCode::bad_version, "version " + std::to_string(version) + ", reader supports " +
                                                   std::to_string(kCheckpointVersion));
  const std::size_t meta_len = get_u32(bytes.data() + 8);
  if (bytes.size() - 12 < meta_len) throw FormatError(FormatCode::truncated, "metadata runs past end of file");

  Checkpoint ckpt;
  json meta;
  try {
    meta = json::parse(bytes.begin() + 12, bytes.begin() + 12 + static_cast<std::ptrdiff_t>(meta_len));
    ckpt.config = config_from_json(meta.at("config"));
    if (meta.contains("vocab")) ckpt.vocab = meta.at("vocab").get<std::vector<std::string>>();
    if (meta.contains("tags")) ckpt.tag_labels = meta.at("tags").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError(FormatCode::bad_metadata, e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(FormatCode::bad_metadata, e.what());
  }
  if (!ckpt.vocab.empty() && ckpt.vocab.size() != ckpt.config.vocab_size)
    throw FormatError(FormatCode::bad_metadata, "vocabulary list does not match vocab_size");

  ckpt.weights = allocate_weights(ckpt.config);
  const auto params = named_parameters(ckpt.weights);
  std::size_t floats = 0;
  try {
    const auto& manifest = meta.at("manifest");
    if (!manifest.is_array() || manifest.size() != params.size())
      throw FormatError(FormatCode::manifest_mismatch, "manifest has the wrong number of entries");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto name = manifest[i].at("name").get<std::string>();
      const auto shape = manifest[i].at("shape").get<Shape>();
      if (name != params[i].first || shape != params[i].second.shape())
        throw FormatError(FormatCode::manifest_mismatch, "entry " + std::to_string(i) + " is " + name + " " +
                                                             shape_str(shape) + ", config implies " +
                                                             params[i].first + " " +
                                                             shape_str(params[i].second.shape()));
      floats += shape_numel(shape);
    }
  } catch (const json::exception& e) {
    throw FormatError(FormatCode::manifest_mismatch, e.what());
  }

  const std::size_t payload = bytes.size() - 12 - meta_len;
  if (payload < floats * 4)
    throw FormatError(FormatCode::truncated, "manifest declares " + std::to_string(floats) + " floats, payload holds " +
                                                 std::to_string(payload / 4));
  if (payload > floats * 4) throw FormatError(FormatCode::trailing_bytes, "payload longer than the manifest");

  const std::uint8_t* p = bytes.data() + 12 + meta_len;
  for (const auto& [name, t] : params) {
    Tensor dst = t;
    for (real& x : dst.data()) {
      x = static_cast<real>(std::bit_cast<float>(get_u32(p)));
      p += 4;
    }
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatCode::io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw FormatError(FormatCode::io, "write to " + path.string() + " failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatCode::io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

Checkpoint clone_checkpoint(const Checkpoint& ckpt) {
  Checkpoint out = ckpt;
  out.weights = clone_weights(ckpt.weights);
  return out;
}

bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
  if (!(a.config == b.config) || a.vocab != b.vocab || a.tag_labels != b.tag_labels) return false;
  const auto pa = named_parameters(a.weights), pb = named_parameters(b.weights);
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i].first != pb[i].first || !pa[i].second.bitwise_equal(pb[i].second)) return false;
  return true;
}

}  // namespace eadl
