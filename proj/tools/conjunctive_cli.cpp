#include "conjunctive/commands.hpp"

int main(int argc, char** argv) { return conjunctive::run_cli(argc, argv); }
