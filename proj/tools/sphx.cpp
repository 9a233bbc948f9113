#include "sphx/cli.hpp"

int main(int argc, char** argv)
{
    return sphx::cli::run(argc, argv);
}
