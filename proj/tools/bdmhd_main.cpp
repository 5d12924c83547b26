#include "bdmhd/runner.hpp"

int main(int argc, char** argv) { return bdmhd::cli(argc, argv); }
