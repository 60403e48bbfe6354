#include "codetree_cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return codetree::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
