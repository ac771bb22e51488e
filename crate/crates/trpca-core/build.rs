fn main() {
    // Per-slice SVD and slice products go through LAPACK/BLAS. OpenBLAS bundles
    // both; fall back to TRPCA_BLAS_LIB for exotic setups.
    let lib = std::env::var("TRPCA_BLAS_LIB").unwrap_or_else(|_| "openblas".to_string());
    println!("cargo:rustc-link-lib=dylib={lib}");
    println!("cargo:rerun-if-env-changed=TRPCA_BLAS_LIB");
}
