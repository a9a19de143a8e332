#include "cli/app.hpp"

int main(int argc, char** argv) { return aberray::cli::run(argc, argv); }
