// Copyright 2026 The sfd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sfd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sfd/error.hpp"

namespace sfd {

namespace {

constexpr char kMagic[4] = {'S', 'F', 'C', 'K'};
constexpr std::uint8_t kDtypeF32 = 1;
constexpr std::uint32_t kMaxHeader = 1u << 24;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : bytes_(std::move(bytes)), path_(std::move(path)) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::Format, "checkpoint " + path_ + ": truncated " + what);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path, std::size_t limit = std::string::npos) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint " + path.string());
  if (limit == std::string::npos)
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::string buf(limit, '\0');
  in.read(buf.data(), static_cast<std::streamsize>(limit));
  buf.resize(static_cast<std::size_t>(in.gcount()));
  return buf;
}

nlohmann::json meta_to_json(const CheckpointMeta& m) {
  return {{"round", m.round}, {"epoch", m.epoch}, {"val_loss", m.val_loss}, {"seed", m.seed}, {"extra", m.extra}};
}

CheckpointHeader parse_header(Reader& r, const std::string& path) {
  const std::string magic = r.str(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    fail(ErrorKind::Format, "checkpoint " + path + ": bad magic");
  CheckpointHeader h;
  h.version = r.u32("version");
  if (h.version != kCheckpointVersion)
    fail(ErrorKind::Format, "checkpoint " + path + ": version " + std::to_string(h.version) +
                                " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t len = r.u32("header length");
  if (len > kMaxHeader) fail(ErrorKind::Format, "checkpoint " + path + ": header length implausible");
  const std::string text = r.str(len, "header");
  try {
    const auto j = nlohmann::json::parse(text);
    h.arch = Architecture::from_json(j.at("architecture"));
    const auto& m = j.at("meta");
    h.meta.round = m.at("round").get<int>();
    h.meta.epoch = m.at("epoch").get<int>();
    h.meta.val_loss = m.at("val_loss").get<double>();
    h.meta.seed = m.at("seed").get<std::uint64_t>();
    h.meta.extra = m.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, "checkpoint " + path + ": bad header: " + e.what());
  }
  return h;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Architecture& arch,
                     const Params<float>& params, const CheckpointMeta& meta) {
  check_shapes(params, arch);
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  const std::string header =
      nlohmann::json{{"architecture", arch.to_json()}, {"meta", meta_to_json(meta)}}.dump();
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  for (const auto& t : params.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    out.push_back(static_cast<char>(kDtypeF32));
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }

  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorKind::Io, "cannot write checkpoint " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) fail(ErrorKind::Io, "failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file(path), path.string());
  CheckpointHeader h = parse_header(r, path.string());
  const Params<float> expected = zero_params<float>(h.arch);
  Params<float> params;
  for (const auto& ref : expected.tensors) {
    NamedTensor<float> t;
    t.name = r.str(r.u32("tensor name length"), "tensor name");
    if (t.name != ref.name)
      fail(ErrorKind::Format, "checkpoint " + path.string() + ": expected tensor '" + ref.name +
                                  "', found '" + t.name + "'");
    if (r.u8("dtype") != kDtypeF32)
      fail(ErrorKind::Format, "checkpoint " + path.string() + ": tensor '" + t.name + "' has unsupported dtype");
    const std::uint32_t ndim = r.u32("ndim");
    if (ndim > 8) fail(ErrorKind::Format, "checkpoint " + path.string() + ": tensor '" + t.name + "' rank implausible");
    for (std::uint32_t d = 0; d < ndim; ++d) t.shape.push_back(static_cast<int>(r.u32("shape")));
    if (t.shape != ref.shape)
      fail(ErrorKind::Format, "checkpoint " + path.string() + ": tensor '" + t.name +
                                  "' shape disagrees with the declared architecture");
    t.values.resize(ref.values.size());
    for (float& v : t.values) v = std::bit_cast<float>(r.u32("payload"));
    params.tensors.push_back(std::move(t));
  }
  if (!r.done()) fail(ErrorKind::Format, "checkpoint " + path.string() + ": trailing bytes");
  return {h.arch, std::move(params), h.meta};
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  // Magic + version + length first, then exactly the header bytes.
  std::string head = read_file(path, 12);
  Reader probe(head, path.string());
  probe.str(4, "magic");
  probe.u32("version");
  const std::uint32_t len = probe.u32("header length");
  if (len > kMaxHeader) fail(ErrorKind::Format, "checkpoint " + path.string() + ": header length implausible");
  Reader r(read_file(path, 12 + static_cast<std::size_t>(len)), path.string());
  return parse_header(r, path.string());
}

}  // namespace sfd
