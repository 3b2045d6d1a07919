#include <iostream>

#include "sheetwalk/app.hpp"

int main(int argc, char** argv) {
  return sheetwalk::run_cli(argc, argv, std::cout, std::cerr);
}
