#include "scattomo/cli.hpp"

int main(int argc, char** argv) { return scattomo::cli::run(argc, argv); }
