#include <pybind11/pybind11.h>
PYBIND11_MODULE(_subreg_core, m) { m.doc() = "placeholder"; }
