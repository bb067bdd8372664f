#include <pybind11/pybind11.h>

PYBIND11_MODULE(_cmcforge, m) { m.doc() = "cmcforge core bindings"; }
