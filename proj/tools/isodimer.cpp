#include "isodimer/cli.hpp"

int main(int argc, char** argv) { return isodimer::run_cli(argc, argv); }
