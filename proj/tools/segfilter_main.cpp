#include "segfilter/cli.hpp"

int main(int argc, char** argv) { return segfilter::cli::run(argc, argv); }
