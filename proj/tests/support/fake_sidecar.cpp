// Minimal JSON-lines backend for exercising the external classifier.
// Usage: fake_sidecar [ok|error|crash|wrong-count|hang|out-of-range|garbage]
// In ok mode the score of a row is logistic(first feature) and a predict
// before any fit is rejected.

#include <chrono>
#include <cmath>
#include <iostream>
#include <string>
#include <thread>

#include "json.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "ok";
  bool fitted = false;
  std::string line;
  while (std::getline(std::cin, line)) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error&) {
      std::cout << json{{"ok", false}, {"error", "malformed request"}}.dump() << std::endl;
      continue;
    }
    const std::string op = msg.value("op", "");
    if (op == "fit") {
      if (mode == "error") {
        std::cout << json{{"ok", false}, {"error", "model exploded"}}.dump() << std::endl;
        continue;
      }
      if (mode == "crash") {
        std::cerr << "fatal: boom" << std::endl;
        return 3;
      }
      fitted = true;
      std::cout << json{{"ok", true}}.dump() << std::endl;
    } else if (op == "predict") {
      if (!fitted) {
        std::cout << json{{"ok", false}, {"error", "predict before fit"}}.dump() << std::endl;
        continue;
      }
      if (mode == "hang") {
        std::this_thread::sleep_for(std::chrono::seconds(30));
        return 0;
      }
      if (mode == "garbage") {
        std::cout << "this is not json" << std::endl;
        continue;
      }
      auto scores = json::array();
      for (const auto& row : msg.at("features")) {
        const double x = row.empty() ? 0.0 : row[0].get<double>();
        scores.push_back(1.0 / (1.0 + std::exp(-x)));
      }
      if (mode == "wrong-count" && !scores.empty()) scores.erase(scores.size() - 1);
      if (mode == "out-of-range" && !scores.empty()) scores[0] = 1.5;
      std::cout << json{{"ok", true}, {"scores", scores}}.dump() << std::endl;
    } else if (op == "shutdown") {
      std::cout << json{{"ok", true}}.dump() << std::endl;
      return 0;
    } else {
      std::cout << json{{"ok", false}, {"error", "unknown op"}}.dump() << std::endl;
    }
  }
  return 0;
}
