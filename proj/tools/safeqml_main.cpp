#include "safeqml/io.hpp"

int main(int argc, char** argv) { return safeqml::cli_main(argc, argv); }
