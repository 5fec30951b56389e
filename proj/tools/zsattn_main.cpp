#include "zsattn/cli.hpp"

int main(int argc, char** argv) { return zsattn::cli::run(argc, argv); }
