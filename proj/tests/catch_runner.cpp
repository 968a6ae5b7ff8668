// Compiles the amalgamated Catch2 implementation (including its default
// main) once; test translation units only include the header.
#include <catch2/catch_amalgamated.cpp>
