#include "confaudit/cli.hpp"

int main(int argc, char** argv) { return confaudit::run_command(argc, argv); }
