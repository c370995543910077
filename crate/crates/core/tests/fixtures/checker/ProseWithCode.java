Here is the Singleton implementation you asked for:

public class ProseWithCode {
    private static ProseWithCode instance;

    private ProseWithCode() {}

    public static ProseWithCode getInstance() {
        if (instance == null) instance = new ProseWithCode();
        return instance;
    }
}

This ensures only one instance exists.
