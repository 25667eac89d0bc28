#include <sqha/io/cli.hpp>

int main(int argc, char** argv) { return sqha::io::run_command(argc, argv); }
