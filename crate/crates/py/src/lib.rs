use pyo3::prelude::*;

#[pymodule]
fn relaxlab_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
