#include "bclust/cli.hpp"

int main(int argc, char** argv) { return bclust::run(argc, argv); }
