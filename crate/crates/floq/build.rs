fn main() {
    // Dense eigensolves and matrix products go through the system LAPACK/BLAS.
    // OpenBLAS ships both symbol sets in one shared object.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
