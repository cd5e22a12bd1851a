#include "stdgn/cli.hpp"

int main(int argc, char** argv) { return stdgn::cli::run(argc, argv); }
