#include "toruslab/harness.hpp"

int main(int argc, char** argv) { return toruslab::harness::run_cli({argv + 1, argv + argc}); }
