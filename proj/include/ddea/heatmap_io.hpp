#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddea/baseline_ops.hpp"
#include "ddea/ea.hpp"
#include "ddea/graph.hpp"
#include "ddea/rng.hpp"
#include "ddea/solution.hpp"

#include <nlohmann/json.hpp>

namespace ddea {

inline constexpr char kHeatmapMagic[4] = {'H', 'M', 'A', 'P'};

namespace detail {

inline void check_heatmap_entry(double v, std::size_t heatmap, std::size_t entry) {
  if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
    std::ostringstream msg;
    msg << "heatmap " << heatmap << " entry " << entry << ": value " << v
        << " outside [0, 1]";
    throw std::runtime_error(msg.str());
  }
}

}  // namespace detail

/// Binary heatmap container: magic `HMAP`, version u8, u32 vertex count,
/// u32 heatmap count, then count*n little-endian 32-bit floats.
inline std::string write_heatmaps(const std::vector<Heatmap>& maps, int n) {
  std::string s(kHeatmapMagic, 4);
  s.push_back(static_cast<char>(1));
  auto put_u32 = [&](std::uint32_t v) {
    for (int k = 0; k < 4; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
  };
  put_u32(static_cast<std::uint32_t>(n));
  put_u32(static_cast<std::uint32_t>(maps.size()));
  for (const auto& m : maps) {
    if (static_cast<int>(m.probs.size()) != n)
      throw std::invalid_argument("write_heatmaps: heatmap length mismatch");
    for (double p : m.probs) {
      const float f = static_cast<float>(p);
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(bits);
    }
  }
  return s;
}

/// Parses either the binary `HMAP` container or the JSON-lines fallback (one
/// probability array per line). Every entry is validated into [0, 1].
inline std::vector<Heatmap> read_heatmaps(const std::string& bytes, int n) {
  std::vector<Heatmap> maps;
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kHeatmapMagic, 4) == 0) {
    std::size_t pos = 4;
    auto need = [&](std::size_t k) {
      if (pos + k > bytes.size()) throw std::runtime_error("read_heatmaps: truncated input");
    };
    need(1);
    if (bytes[pos++] != 1) throw std::runtime_error("read_heatmaps: unsupported version");
    auto get_u32 = [&]() {
      need(4);
      std::uint32_t v = 0;
      for (int k = 0; k < 4; ++k)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + k])) << (8 * k);
      pos += 4;
      return v;
    };
    const std::uint32_t file_n = get_u32();
    if (file_n != static_cast<std::uint32_t>(n)) {
      std::ostringstream msg;
      msg << "read_heatmaps: file has n=" << file_n << ", expected n=" << n;
      throw std::runtime_error(msg.str());
    }
    const std::uint32_t count = get_u32();
    maps.reserve(count);
    for (std::uint32_t h = 0; h < count; ++h) {
      Heatmap m;
      m.probs.resize(n);
      for (int i = 0; i < n; ++i) {
        const std::uint32_t word = get_u32();
        float f;
        std::memcpy(&f, &word, 4);
        m.probs[i] = f;
        detail::check_heatmap_entry(m.probs[i], h, i);
      }
      maps.push_back(std::move(m));
    }
    if (pos != bytes.size()) throw std::runtime_error("read_heatmaps: trailing bytes");
    return maps;
  }

  // JSON-lines fallback
  std::istringstream in(bytes);
  std::string line;
  std::size_t lineno = 0, h = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("read_heatmaps: line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_array() || static_cast<int>(j.size()) != n) {
      std::ostringstream msg;
      msg << "read_heatmaps: line " << lineno << ": expected array of " << n << " numbers";
      throw std::runtime_error(msg.str());
    }
    Heatmap m;
    m.probs.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (!j[i].is_number()) throw std::runtime_error("read_heatmaps: line " + std::to_string(lineno) + ": non-numeric entry");
      m.probs.push_back(j[i].get<double>());
      detail::check_heatmap_entry(m.probs[i], h, i);
    }
    maps.push_back(std::move(m));
    ++h;
  }
  return maps;
}

inline void save_heatmaps_file(const std::vector<Heatmap>& maps, int n, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_heatmaps_file: cannot open " + path);
  const std::string s = write_heatmaps(maps, n);
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::vector<Heatmap> load_heatmaps_file(const std::string& path, int n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_heatmaps_file: cannot open " + path);
  std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_heatmaps(s, n);
}

/// Diffusion-based initialization: decode up to P externally supplied
/// heatmaps, drop duplicates, and pad any shortfall with randomized-greedy
/// members.
inline Population diffusion_init(const Graph& g, const std::vector<Heatmap>& heatmaps,
                                 int population_size, std::uint64_t seed) {
  if (heatmaps.empty()) throw std::invalid_argument("diffusion_init: no heatmaps");
  if (population_size < 1) throw std::invalid_argument("diffusion_init: population_size must be >= 1");
  Population pop;
  const int take = std::min<int>(population_size, static_cast<int>(heatmaps.size()));
  for (int j = 0; j < take; ++j)
    pop.push_back(decode(g, heatmaps[j], derive_seed(seed, Stream::kInit, j)));
  detail::dedupe_in_place(pop);
  if (static_cast<int>(pop.size()) < population_size) {
    Population fill =
        rg_init(g, population_size, derive_seed(seed, Stream::kPadding));
    for (auto& s : fill) {
      if (static_cast<int>(pop.size()) == population_size) break;
      pop.push_back(std::move(s));
    }
    detail::dedupe_in_place(pop);
  }
  return pop;
}

/// Stand-in for samples from a high-quality external model: each heatmap is
/// the reference solution's indicator perturbed entrywise by uniform noise,
/// pushing selected vertices toward 1 and the rest toward 0.
inline std::vector<Heatmap> synthetic_heatmaps(const Graph& g, const Solution& reference,
                                               int count, double noise, std::uint64_t seed) {
  if (reference.num_vertices() != g.num_vertices())
    throw std::invalid_argument("synthetic_heatmaps: reference size mismatch");
  if (noise < 0.0 || noise > 1.0) throw std::invalid_argument("synthetic_heatmaps: noise outside [0, 1]");
  std::vector<Heatmap> maps(count);
  for (int j = 0; j < count; ++j) {
    Rng rng(derive_seed(seed, Stream::kNoise, j));
    maps[j].probs.resize(g.num_vertices());
    for (int i = 0; i < g.num_vertices(); ++i) {
      const double u = rng.unit() * noise;
      maps[j].probs[i] = reference.contains(i) ? 1.0 - u : u;
    }
  }
  return maps;
}

inline InitFn make_diffusion_initializer(std::vector<Heatmap> heatmaps) {
  return [heatmaps = std::move(heatmaps)](const Graph& g, int population_size,
                                          std::uint64_t seed) {
    return diffusion_init(g, heatmaps, population_size, seed);
  };
}

/// Initializer that synthesizes its heatmaps from a known reference solution
/// at population-build time.
inline InitFn make_synthetic_initializer(Solution reference, double noise = 0.3) {
  return [reference = std::move(reference), noise](const Graph& g, int population_size,
                                                   std::uint64_t seed) {
    const std::vector<Heatmap> maps =
        synthetic_heatmaps(g, reference, population_size, noise, derive_seed(seed, Stream::kNoise));
    return diffusion_init(g, maps, population_size, seed);
  };
}

}  // namespace ddea
