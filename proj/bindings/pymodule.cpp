#include <pybind11/pybind11.h>
PYBIND11_MODULE(_certitight, m) { m.doc() = "placeholder"; }
