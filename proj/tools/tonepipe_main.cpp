#include "tonepipe/cli.hpp"

int main(int argc, char** argv) { return tonepipe::run_command(argc, argv); }
