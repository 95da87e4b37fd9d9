#include <iostream>
#include <string>
#include <vector>

#include "battleship/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return battleship::cli::dispatch(std::move(args));
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << "\n";
    return battleship::cli::kExitRuntimeError;
  }
}
