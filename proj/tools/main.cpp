#include "commands.hpp"

int main(int argc, char** argv) { return fradrc::cli::run(argc, argv); }
