#include <iostream>

#include "ddlqr/cli.hpp"

int main(int argc, char** argv) { return ddlqr::run_cli(argc, argv, std::cout, std::cerr); }
