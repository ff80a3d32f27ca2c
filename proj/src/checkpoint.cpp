#include "lkdn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lkdn/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

namespace lkdn {

namespace {

constexpr const char* kMagic = "lkdn-checkpoint v1";

struct IndexEntry {
  std::string name;
  std::array<int, 4> shape;
  int64_t offset = 0, length = 0;
};

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)v);
  return buf;
}

void append_section(std::vector<IndexEntry>& index, std::string& payload,
                    const ParamStore& store, const std::string& prefix) {
  for (const auto& [name, t] : store) {
    IndexEntry e;
    e.name = prefix + name;
    e.shape = t.shape;
    e.offset = int64_t(payload.size());
    e.length = int64_t(t.data.size() * sizeof(float));
    payload.resize(payload.size() + size_t(e.length));
    std::memcpy(payload.data() + e.offset, t.data.data(), size_t(e.length));
    index.push_back(std::move(e));
  }
}

IndexEntry parse_index_line(const std::string& line) {
  std::istringstream ss(line);
  IndexEntry e;
  std::string shape_kv, dtype_kv, offset_kv, length_kv;
  if (!(ss >> e.name >> shape_kv >> dtype_kv >> offset_kv >> length_kv))
    throw IoError("malformed checkpoint index line: " + line);
  auto value_of = [&](const std::string& kv, const char* key) {
    const std::string want = std::string(key) + "=";
    if (kv.rfind(want, 0) != 0) throw IoError("malformed checkpoint index line: " + line);
    return kv.substr(want.size());
  };
  const std::string shape = value_of(shape_kv, "shape");
  if (std::sscanf(shape.c_str(), "%d,%d,%d,%d", &e.shape[0], &e.shape[1], &e.shape[2],
                  &e.shape[3]) != 4)
    throw IoError("malformed tensor shape in checkpoint: " + line);
  if (value_of(dtype_kv, "dtype") != "f32")
    throw IoError("unsupported tensor dtype in checkpoint: " + line);
  e.offset = std::stoll(value_of(offset_kv, "offset"));
  e.length = std::stoll(value_of(length_kv, "length"));
  return e;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::vector<IndexEntry> index;
  std::string payload;
  append_section(index, payload, params, "param.");
  append_section(index, payload, ema, "ema.");
  append_section(index, payload, opt_state, "opt.");

  std::ostringstream head;
  head << kMagic << "\n";
  for (const auto& [k, v] : config_to_kv(cfg)) head << "config." << k << " " << v << "\n";
  head << "optimizer " << optimizer << "\n";
  head << "step " << step << "\n";
  head << "tensor_count " << index.size() << "\n";
  head << "checksum " << hex64(fnv1a64(payload.data(), payload.size())) << "\n";
  for (const auto& e : index)
    head << e.name << " shape=" << e.shape[0] << "," << e.shape[1] << "," << e.shape[2] << ","
         << e.shape[3] << " dtype=f32 offset=" << e.offset << " length=" << e.length << "\n";
  head << "payload " << payload.size() << "\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::string header = head.str();
  out.write(header.data(), std::streamsize(header.size()));
  out.write(payload.data(), std::streamsize(payload.size()));
  out.flush();
  if (!out) throw IoError("failed writing checkpoint " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);

  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw IoError(path + " is not a checkpoint (bad magic)");

  Checkpoint ck;
  std::map<std::string, std::string> config_kv;
  std::vector<IndexEntry> index;
  std::string checksum;
  int64_t tensor_count = -1, payload_size = -1;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key.rfind("config.", 0) == 0) {
      config_kv[key.substr(7)] = rest;
    } else if (key == "optimizer") {
      ck.optimizer = rest;
    } else if (key == "step") {
      ck.step = std::stoll(rest);
    } else if (key == "tensor_count") {
      tensor_count = std::stoll(rest);
    } else if (key == "checksum") {
      checksum = rest;
    } else if (key == "payload") {
      payload_size = std::stoll(rest);
      break;
    } else {
      index.push_back(parse_index_line(line));
    }
  }
  if (payload_size < 0) throw IoError(path + ": missing payload marker");
  if (tensor_count != int64_t(index.size()))
    throw IoError(path + ": tensor_count disagrees with index");
  ck.cfg = config_from_kv(config_kv);
  if (!config_kv.empty())
    throw IoError(path + ": unknown config key " + config_kv.begin()->first);

  std::string payload(size_t(payload_size), '\0');
  in.read(payload.data(), std::streamsize(payload.size()));
  if (in.gcount() != std::streamsize(payload.size()))
    throw IoError(path + ": truncated payload");
  if (hex64(fnv1a64(payload.data(), payload.size())) != checksum)
    throw IoError(path + ": payload checksum mismatch");

  for (const auto& e : index) {
    TensorT<float> t(e.shape[0], e.shape[1], e.shape[2], e.shape[3]);
    if (e.offset < 0 || e.length != int64_t(t.data.size() * sizeof(float)) ||
        size_t(e.offset) + size_t(e.length) > payload.size())
      throw IoError(path + ": tensor " + e.name + " does not fit its declared extent");
    std::memcpy(t.data.data(), payload.data() + e.offset, size_t(e.length));
    if (e.name.rfind("param.", 0) == 0)
      ck.params.add(e.name.substr(6), std::move(t));
    else if (e.name.rfind("ema.", 0) == 0)
      ck.ema.add(e.name.substr(4), std::move(t));
    else if (e.name.rfind("opt.", 0) == 0)
      ck.opt_state.add(e.name.substr(4), std::move(t));
    else
      throw IoError(path + ": tensor " + e.name + " has no known section prefix");
  }
  return ck;
}

}  // namespace lkdn
