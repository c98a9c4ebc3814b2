#include <iostream>

#include "riskbench/app.hpp"

int main(int argc, char** argv) { return riskbench::dispatch(argc, argv, std::cout, std::cerr); }
