public class PrivateAccessor {
    private static PrivateAccessor instance;

    private PrivateAccessor() {}

    private static PrivateAccessor getInstance() {
        return instance;
    }
}
