#pragma once

#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ddea/ea.hpp"
#include "ddea/expert.hpp"

namespace ddea {

/// One expert demonstration: parents and the optimized offspring.
struct TripletRecord {
  std::string graph_id;
  std::string x, y, z;  // solution bitstrings
  std::string status;   // "optimal" | "feasible-timeout"
};

/// Only tree-closed expert calls are used as training labels.
inline bool is_trainable(const TripletRecord& r) { return r.status == "optimal"; }

/// Thread-safe JSON-lines sink for expert demonstrations.
class TripletWriter {
 public:
  explicit TripletWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("TripletWriter: cannot open " + path);
  }

  void append(const TripletRecord& r) {
    nlohmann::json j{{"graph", r.graph_id}, {"x", r.x}, {"y", r.y}, {"z", r.z}, {"status", r.status}};
    std::lock_guard<std::mutex> lock(mu_);
    out_ << j.dump() << '\n';
    ++count_;
  }

  long long count() const {
    std::lock_guard<std::mutex> lock(mu_);
    return count_;
  }

  void flush() {
    std::lock_guard<std::mutex> lock(mu_);
    out_.flush();
  }

 private:
  mutable std::mutex mu_;
  std::ofstream out_;
  long long count_ = 0;
};

inline std::vector<TripletRecord> read_triplets(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_triplets: cannot open " + path);
  std::vector<TripletRecord> out;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("read_triplets: bad JSON at line " + std::to_string(line_no) + ": " +
                               e.what());
    }
    out.push_back({j.at("graph").get<std::string>(), j.at("x").get<std::string>(),
                   j.at("y").get<std::string>(), j.at("z").get<std::string>(),
                   j.at("status").get<std::string>()});
  }
  return out;
}

/// Expert recombination as an engine operator. Every call is appended to the
/// sink when one is given.
inline RecombFn make_expert_recombiner(ExpertParams params, TripletWriter* sink = nullptr,
                                       std::string graph_id = "") {
  return [params, sink, graph_id](const Graph& g, const Solution& x, const Solution& y,
                                  std::uint64_t) {
    ExpertResult r = expert_recombine(g, x, y, params);
    if (sink)
      sink->append({graph_id, x.to_string(), y.to_string(), r.offspring.to_string(),
                    to_string(r.status)});
    return std::vector<Solution>{r.offspring};
  };
}

}  // namespace ddea
