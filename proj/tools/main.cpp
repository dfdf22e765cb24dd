#include "zenosde/cli.hpp"

int main(int argc, char** argv) { return zenosde::cli::run(argc, argv); }
