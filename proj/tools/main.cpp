#include "decomcam_cli.hpp"

int main(int argc, char** argv) { return decomcam::cli::run_cli(argc, argv); }
