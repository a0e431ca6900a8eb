// Test double for the subprocess encoder protocol.
//
//   stub_encoder --mode MODE [--dim D]
//
// hash        per-token seeded unit vectors, sentence = normalized mean
// echo-index  row i = (i, token count, first token as a number or 0, 0...)
// wrong-dim   like hash but every row has D + 1 values
// bad-id      replies with id + 1
// short       drops the last row of every reply
// die         writes to stderr and exits 3 on the first request
// hang        never answers a request
// garbage     answers with a line that is not JSON
// no-hello    starts by printing an embeddings message
// bad-exit    exits 5 on shutdown

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

using json = nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<double> unit(std::vector<double> v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0) {
    for (double& x : v) x /= n;
  }
  return v;
}

std::vector<double> token_vector(const std::string& tok, std::size_t dim) {
  std::uint64_t state = fnv1a(tok);
  std::vector<double> v(dim);
  for (double& x : v) x = static_cast<double>(splitmix(state) >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  return unit(std::move(v));
}

std::vector<double> hash_sentence(const std::vector<std::string>& tokens, std::size_t dim) {
  std::vector<double> sum(dim, 0.0);
  for (const auto& t : tokens) {
    const auto tv = token_vector(t, dim);
    for (std::size_t j = 0; j < dim; ++j) sum[j] += tv[j];
  }
  if (tokens.empty()) sum[0] = 1.0;
  return unit(std::move(sum));
}

std::vector<double> echo_row(std::size_t i, const std::vector<std::string>& tokens, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  v[0] = static_cast<double>(i);
  if (dim > 1) v[1] = static_cast<double>(tokens.size());
  if (dim > 2 && !tokens.empty()) v[2] = std::strtod(tokens[0].c_str(), nullptr);
  return v;
}

void send(const json& j) { std::cout << j.dump() << '\n' << std::flush; }

}  // namespace

int main(int argc, char** argv) {
  std::string mode = "hash";
  std::size_t dim = 8;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    if (key == "--mode") mode = argv[i + 1];
    else if (key == "--dim") dim = std::stoul(argv[i + 1]);
  }
  if (dim == 0) {
    std::cerr << "stub_encoder: dim must be > 0\n";
    return 2;
  }

  if (mode == "no-hello") {
    send({{"type", "embeddings"}, {"id", 0}, {"vectors", json::array()}});
  } else {
    send({{"type", "hello"}, {"dim", dim}});
  }

  std::string line;
  while (std::getline(std::cin, line)) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::exception& e) {
      std::cerr << "stub_encoder: malformed request: " << e.what() << "\n";
      return 2;
    }
    const std::string type = msg.value("type", "");
    if (type == "shutdown") return mode == "bad-exit" ? 5 : 0;
    if (type != "encode") {
      std::cerr << "stub_encoder: unknown request type '" << type << "'\n";
      return 2;
    }
    if (mode == "die") {
      std::cerr << "stub_encoder: simulated crash while encoding\n";
      return 3;
    }
    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    if (mode == "garbage") {
      std::cout << "this is not json\n" << std::flush;
      continue;
    }
    const auto sentences = msg.at("sentences").get<std::vector<std::vector<std::string>>>();
    json vectors = json::array();
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      if (mode == "echo-index") {
        vectors.push_back(echo_row(i, sentences[i], dim));
      } else if (mode == "wrong-dim") {
        vectors.push_back(hash_sentence(sentences[i], dim + 1));
      } else {
        vectors.push_back(hash_sentence(sentences[i], dim));
      }
    }
    if (mode == "short" && !vectors.empty()) vectors.erase(vectors.size() - 1);
    std::uint64_t id = msg.at("id").get<std::uint64_t>();
    if (mode == "bad-id") ++id;
    send({{"type", "embeddings"}, {"id", id}, {"vectors", vectors}});
  }
  return 0;
}
