#include "slag/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return slag::runCli(argc, argv, std::cout, std::cerr); }
