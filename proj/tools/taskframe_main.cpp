#include <iostream>

#include "taskframe/cli.hpp"

int main(int argc, char** argv) {
  return taskframe::RunCli(argc, argv, std::cout, std::cerr);
}
