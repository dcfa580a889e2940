#include <iostream>

#include "cli.hpp"
#include "olt/parallel.hpp"

int main(int argc, char** argv) {
  olt::configure_allocator();
  return olt::cli::cli_dispatch(argc, argv, std::cout, std::cerr);
}
