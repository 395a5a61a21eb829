#include "cli_app.hpp"

int main(int argc, char** argv) { return hrl4pfg::app::run_cli(argc, argv); }
