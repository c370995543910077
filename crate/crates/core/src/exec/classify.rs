use std::sync::OnceLock;

use regex::Regex;

use super::CompileErrorCategory;
use crate::source::parse_compilation_unit;

/// Package roots that ship with the JDK and are therefore on every classpath.
const JDK_PACKAGE_ROOTS: &[&str] =
    &["java.", "javax.", "jdk.", "sun.", "com.sun.", "org.w3c.", "org.xml.", "org.ietf."];

fn missing_package() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"package ([A-Za-z_$][\w$]*(?:\.[A-Za-z_$][\w$]*)*) does not exist").unwrap())
}

fn missing_class_symbol() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"cannot find symbol\s*(?:\r?\n.*?)*?symbol:\s+class\s+([A-Za-z_$][\w$]*)").unwrap())
}

fn import_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?m)^\s*import\s+(?:static\s+)?([\w$.]+\*?)\s*;").unwrap())
}

fn is_jdk_package(name: &str) -> bool {
    let dotted = format!("{name}.");
    JDK_PACKAGE_ROOTS.iter().any(|root| dotted.starts_with(root))
}

/// Coarse bucketing of a failed compilation.
///
/// * `non_code_output`: no class can be extracted from the candidate.
/// * `missing_external_library`: javac reports a non-JDK package as missing,
///   or an unknown class that the candidate imports from a non-JDK package.
/// * `other_compile_error`: everything else.
pub fn classify_compile_error(diagnostics: &str, candidate: &str) -> CompileErrorCategory {
    if parse_compilation_unit(candidate).is_empty() {
        return CompileErrorCategory::NonCodeOutput;
    }
    let external_package = missing_package().captures_iter(diagnostics).any(|c| !is_jdk_package(&c[1]));
    if external_package {
        return CompileErrorCategory::MissingExternalLibrary;
    }
    let external_imports: Vec<String> =
        import_line().captures_iter(candidate).map(|c| c[1].to_string()).filter(|path| !is_jdk_package(path)).collect();
    let imported_class_missing = missing_class_symbol().captures_iter(diagnostics).any(|c| {
        let class = &c[1];
        external_imports.iter().any(|path| path.rsplit('.').next() == Some(class))
    });
    if imported_class_missing {
        return CompileErrorCategory::MissingExternalLibrary;
    }
    CompileErrorCategory::OtherCompileError
}

/// Import statements of a source file, in order.
pub(crate) fn import_statements(source: &str) -> Vec<String> {
    import_line().find_iter(source).map(|m| m.as_str().trim().to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CODE: &str = "import java.util.*;\nclass Solution { int f() { return 1 } }";

    #[test]
    fn prose_is_non_code() {
        let prose = "The answer uses a singleton. I cannot provide code.";
        assert_eq!(
            classify_compile_error("Main.java:1: error: class, interface, enum, or record expected", prose),
            CompileErrorCategory::NonCodeOutput
        );
    }

    #[test]
    fn missing_package_is_external() {
        let diag = "Solution.java:1: error: package org.apache.commons does not exist\nimport org.apache.commons.lang3.StringUtils;";
        assert_eq!(classify_compile_error(diag, CODE), CompileErrorCategory::MissingExternalLibrary);
    }

    #[test]
    fn jdk_package_is_not_external() {
        let diag = "Solution.java:1: error: package java.utils does not exist";
        assert_eq!(classify_compile_error(diag, CODE), CompileErrorCategory::OtherCompileError);
    }

    #[test]
    fn unknown_imported_class_is_external() {
        let candidate = "import com.google.common.collect.ImmutableList;\nclass Solution { }";
        let diag = "Solution.java:5: error: cannot find symbol\n        ImmutableList<String> x;\n        ^\n  symbol:   class ImmutableList\n  location: class Solution";
        assert_eq!(classify_compile_error(diag, candidate), CompileErrorCategory::MissingExternalLibrary);
    }

    #[test]
    fn syntax_error_falls_back() {
        assert_eq!(
            classify_compile_error("Solution.java:2: error: ';' expected", CODE),
            CompileErrorCategory::OtherCompileError
        );
    }

    #[test]
    fn imports_are_listed() {
        let src = "package p;\nimport java.util.*;\n  import static java.lang.Math.max;\nclass A {}";
        assert_eq!(import_statements(src), ["import java.util.*;", "import static java.lang.Math.max;"]);
    }
}
