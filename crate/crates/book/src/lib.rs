//! Compiles every listing of the guide in `book/` as a doctest.

macro_rules! chapter {
    ($name:ident, $file:literal) => {
        #[doc = include_str!(concat!("../../../book/src/", $file))]
        pub mod $name {}
    };
}

chapter!(introduction, "introduction.md");
chapter!(projections, "projections.md");
chapter!(discretization, "discretization.md");
chapter!(elliptic, "elliptic.md");
chapter!(parabolic, "parabolic.md");
chapter!(counterexamples, "counterexamples.md");
chapter!(verifier, "verifier.md");
chapter!(cli, "cli.md");
