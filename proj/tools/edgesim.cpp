#include "edgesim/cli_app.hpp"

int main(int argc, char** argv) { return edgesim::cli_main(argc, argv); }
