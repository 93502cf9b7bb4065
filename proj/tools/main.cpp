#include <iostream>

#include "affalg/io.hpp"

int main(int argc, char** argv) {
  return affalg::run_cli(argc, argv, std::cout, std::cerr);
}
