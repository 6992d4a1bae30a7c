#include "mltb/cli.hpp"

int main(int argc, char** argv) { return mltb::cli_main(argc, argv); }
