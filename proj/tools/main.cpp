#include <iostream>

#include "featlab/cli.hpp"

int main(int argc, char** argv) {
  return featlab::cli::dispatch(argc, argv, std::cout, std::cerr);
}
