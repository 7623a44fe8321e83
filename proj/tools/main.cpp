#include <iostream>

#include "rainmamba/cli.hpp"

int main(int argc, char** argv) {
  return rainmamba::cli::dispatch(argc, argv, std::cout, std::cerr);
}
